//! Physical plan construction: lower a relational query plan onto a chain
//! of map-shuffle-reduce stages.
//!
//! Each view becomes a scan stage, each join in the left-deep tree becomes
//! one reduce-side join stage, and the tail is at most a projection, a
//! duplicate-elimination stage and a single-reducer sort. Residual filters
//! and the projection run in the map of the first stage after the last
//! join, so a query without joins needs exactly two stages.

use std::fmt;

use query_planner::{
    AstNode, JoinEdge, JoinKind, PlannedQuery, Projection, Scope, SelectCondition, SortKey,
};
use rdf_model::Term;
use sparql_frontend::SortOrder;

/// Synthetic trailing column on a row-describing scan: holds every column
/// of the subject row, not only the ones named by patterns.
pub const ALL_CELLS_COLUMN: &str = "__cells";

/// Residual filters and the projection of one branch. Applied in the map
/// of the stage that carries it.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalizeOp {
    pub branch: usize,
    pub residuals: Vec<SelectCondition>,
    pub projection: Projection,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StageKind {
    /// Read one view's rows. The map checks required columns, applies the
    /// pushed equality filters and expands multi-valued join and filter
    /// columns into logical rows.
    Scan {
        view: usize,
        /// Constant subject: fetch a single row, bloom-checking each block.
        key: Option<Term>,
        pushed: Vec<SelectCondition>,
        /// Carry the whole row alongside the schema columns.
        all_cells: bool,
    },
    /// Reduce-side join attaching one view to the rows joined so far. All
    /// edges landing on the view form one composite join key.
    Join {
        attach: usize,
        kind: JoinKind,
        edges: Vec<JoinEdge>,
    },
    /// Residual filters plus projection, keyed canonically.
    Project { finalize: FinalizeOp },
    /// Group-by-all-columns duplicate elimination.
    Dedup { finalize: Option<FinalizeOp> },
    /// Single-reducer global sort and limit.
    Sort {
        keys: Vec<SortKey>,
        limit: Option<usize>,
        finalize: Option<FinalizeOp>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageDesc {
    pub name: String,
    /// Indices of earlier stages whose outputs feed this one.
    pub inputs: Vec<usize>,
    pub kind: StageKind,
}

/// The full stage DAG in execution order. Stage inputs always point at
/// earlier stages, so the order itself is a topological one.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalPlan {
    pub stages: Vec<StageDesc>,
}

impl PhysicalPlan {
    pub fn join_stage_count(&self) -> usize {
        self.stages
            .iter()
            .filter(|s| matches!(s.kind, StageKind::Join { .. }))
            .count()
    }

    /// Stages no other stage consumes; their outputs concatenate into the
    /// query result.
    pub fn terminal_stages(&self) -> Vec<usize> {
        let mut consumed = vec![false; self.stages.len()];
        for stage in &self.stages {
            for &i in &stage.inputs {
                consumed[i] = true;
            }
        }
        (0..self.stages.len()).filter(|&i| !consumed[i]).collect()
    }

    pub fn explain(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PhysicalPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, stage) in self.stages.iter().enumerate() {
            writeln!(f, "Stage-{} {}", i + 1, stage.name)?;
            if !stage.inputs.is_empty() {
                let feeds: Vec<String> = stage
                    .inputs
                    .iter()
                    .map(|&j| format!("Stage-{}", j + 1))
                    .collect();
                writeln!(f, "  input: {}", feeds.join(", "))?;
            }
            match &stage.kind {
                StageKind::Scan {
                    view,
                    key,
                    pushed,
                    all_cells,
                } => {
                    match key {
                        Some(term) => writeln!(f, "  scan R{view}: key = {term}, bloom row+column")?,
                        None => writeln!(f, "  scan R{view}: all regions")?,
                    }
                    if *all_cells {
                        writeln!(f, "  fetch: whole row")?;
                    }
                    for sel in pushed {
                        writeln!(f, "  filter: {sel}")?;
                    }
                }
                StageKind::Join {
                    attach,
                    kind,
                    edges,
                } => {
                    let label = match kind {
                        JoinKind::Inner => "join",
                        JoinKind::LeftOuter => "left outer join",
                    };
                    writeln!(f, "  {label}: attach R{attach}")?;
                    for edge in edges {
                        writeln!(f, "  on: {edge}")?;
                    }
                }
                StageKind::Project { finalize } => write_finalize(f, finalize)?,
                StageKind::Dedup { finalize } => {
                    if let Some(op) = finalize {
                        write_finalize(f, op)?;
                    }
                    writeln!(f, "  distinct: group by all columns")?;
                }
                StageKind::Sort {
                    keys,
                    limit,
                    finalize,
                } => {
                    if let Some(op) = finalize {
                        write_finalize(f, op)?;
                    }
                    if keys.is_empty() {
                        writeln!(f, "  order: canonical")?;
                    } else {
                        let parts: Vec<String> = keys
                            .iter()
                            .map(|k| match k.order {
                                SortOrder::Asc => format!("?{}", k.variable),
                                SortOrder::Desc => format!("DESC(?{})", k.variable),
                            })
                            .collect();
                        writeln!(f, "  order: {}", parts.join(", "))?;
                    }
                    if let Some(n) = limit {
                        writeln!(f, "  limit: {n}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn write_finalize(f: &mut fmt::Formatter<'_>, op: &FinalizeOp) -> fmt::Result {
    for sel in &op.residuals {
        writeln!(f, "  filter: {sel}")?;
    }
    match &op.projection {
        Projection::Columns(cols) => {
            let parts: Vec<String> = cols.iter().map(|c| c.to_string()).collect();
            writeln!(f, "  project: {}", parts.join(", "))
        }
        Projection::AllColumns(view) => writeln!(f, "  project: R{view}.* as (key, column, value)"),
    }
}

/// Lower a planned query to its stage DAG.
pub fn compile_physical(plan: &PlannedQuery) -> PhysicalPlan {
    let mut stages: Vec<StageDesc> = Vec::new();
    let union = plan.branches.len() > 1;
    let mut branch_heads = Vec::new();
    let mut pending_finalize = None;

    for (bi, branch) in plan.branches.iter().enumerate() {
        let mut scan_of = Vec::new();
        for view in &branch.views {
            let key = branch
                .selections
                .iter()
                .find(|s| s.view == view.index && s.is_key_equality())
                .and_then(|s| match &s.kind {
                    query_planner::ConditionKind::Compare { value, .. } => Some(value.clone()),
                    _ => None,
                });
            // Key equalities and required-scope column equalities filter at
            // the scan; optional-scope equalities must wait until after the
            // outer joins so unmatched rows keep their null padding.
            let pushed: Vec<SelectCondition> = branch
                .selections
                .iter()
                .filter(|s| {
                    s.view == view.index
                        && s.is_equality()
                        && (s.is_key_equality() || s.scope == Scope::Required)
                })
                .cloned()
                .collect();
            let all_cells = matches!(branch_projection(branch),
                Projection::AllColumns(target) if *target == view.index);
            stages.push(StageDesc {
                name: format!("scan-R{}", view.index),
                inputs: Vec::new(),
                kind: StageKind::Scan {
                    view: view.index,
                    key,
                    pushed,
                    all_cells,
                },
            });
            scan_of.push(stages.len() - 1);
        }
        let mut head = scan_of[0];
        for (vi, view) in branch.views.iter().enumerate().skip(1) {
            let edges: Vec<JoinEdge> = branch
                .edges
                .iter()
                .filter(|e| e.attach_view() == view.index)
                .cloned()
                .collect();
            let kind = if edges.iter().any(|e| e.kind == JoinKind::Inner) {
                JoinKind::Inner
            } else {
                JoinKind::LeftOuter
            };
            stages.push(StageDesc {
                name: format!("join-R{}", view.index),
                inputs: vec![head, scan_of[vi]],
                kind: StageKind::Join {
                    attach: view.index,
                    kind,
                    edges,
                },
            });
            head = stages.len() - 1;
        }

        let finalize = FinalizeOp {
            branch: bi,
            residuals: branch
                .selections
                .iter()
                .filter(|s| {
                    !s.is_equality() || (!s.is_key_equality() && s.scope == Scope::Optional)
                })
                .cloned()
                .collect(),
            projection: branch_projection(branch).clone(),
        };
        if union {
            stages.push(StageDesc {
                name: format!("project-b{}", bi + 1),
                inputs: vec![head],
                kind: StageKind::Project { finalize },
            });
            head = stages.len() - 1;
        } else {
            pending_finalize = Some(finalize);
        }
        branch_heads.push(head);
    }

    let mut heads = branch_heads;
    let dedup = plan.distinct || plan.reduced;
    let sorted = !plan.order_by.is_empty() || plan.limit.is_some();
    if dedup {
        stages.push(StageDesc {
            name: "dedup".into(),
            inputs: heads.clone(),
            kind: StageKind::Dedup {
                finalize: pending_finalize.take(),
            },
        });
        heads = vec![stages.len() - 1];
    }
    if sorted {
        stages.push(StageDesc {
            name: "sort".into(),
            inputs: heads.clone(),
            kind: StageKind::Sort {
                keys: plan.order_by.clone(),
                limit: plan.limit.map(|n| n as usize),
                finalize: pending_finalize.take(),
            },
        });
        heads = vec![stages.len() - 1];
    }
    if let Some(finalize) = pending_finalize {
        stages.push(StageDesc {
            name: "project".into(),
            inputs: heads,
            kind: StageKind::Project { finalize },
        });
    }

    PhysicalPlan { stages }
}

/// The projection at the root of a branch subtree.
pub(crate) fn branch_projection(branch: &query_planner::BranchPlan) -> &Projection {
    match &branch.root {
        AstNode::Project { projection, .. } => projection,
        _ => unreachable!("branch roots always project"),
    }
}
