//! Embedded RDF store: property-table storage behind a SPARQL subset that
//! compiles to SQL text and executes as staged MapReduce jobs. This crate
//! ties the pieces together and adds the reference evaluators, synthetic
//! data generators, and statistics jobs used to validate the engine.

pub mod bench;
pub mod gen;
pub mod nested;
pub mod oracle;
pub mod random;
pub mod stats;

use mapreduce_exec::compile_physical;
use query_planner::PlannedQuery;

/// Number of join stages the physical plan for a query will run.
pub fn detect_joins(plan: &PlannedQuery) -> usize {
    compile_physical(plan).join_stage_count()
}
