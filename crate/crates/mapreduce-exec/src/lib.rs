//! In-process MapReduce engine and the physical executor for query plans.
//!
//! Jobs run map tasks over input splits, shuffle intermediates into hashed
//! and sorted partitions, and reduce per key group. Output order is fully
//! deterministic regardless of the parallelism degree.

mod engine;
mod exec;
mod plan;

pub use engine::{
    default_partition, fnv1a64, run_job, ExecError, ExecMetrics, KeyValue, MapFn, MrJob,
    PartitionFn, ReduceFn, StageMetrics,
};
pub use exec::{execute, execute_physical, render_row, render_slot, Row, SlotValue};
pub use plan::{
    compile_physical, FinalizeOp, PhysicalPlan, StageDesc, StageKind, ALL_CELLS_COLUMN,
};
