//! Query planning: group triple patterns by subject, synthesize one view per
//! subject, detect join edges between views, bind variables to view columns,
//! and assemble the relational-algebra tree that the SQL generator prints
//! and the execution engine compiles.

mod plan;
mod types;

pub use plan::plan_query;
pub use types::{
    AstNode, BranchPlan, ColumnDef, ColumnRef, ConditionKind, JoinEdge, JoinKind, PlannedQuery,
    Projection, Scope, SelectCondition, SortKey, ViewDef, KEY_COLUMN,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("variable predicate ?{0} is not supported")]
    VariablePredicate(String),
    #[error("view {view} over {subject} shares no key with any earlier view; Cartesian products are not supported")]
    CartesianProduct { view: String, subject: String },
    #[error("a pattern may not join a subject to itself")]
    SelfJoin,
    #[error("variable ?{0} has no binding")]
    Unbound(String),
    #[error("projected variable ?{0} is not bound in every UNION branch")]
    UnionProjection(String),
    #[error("ORDER BY variable ?{0} must be projected")]
    OrderByNotProjected(String),
    #[error("{0} is not supported")]
    UnsupportedShape(String),
}
