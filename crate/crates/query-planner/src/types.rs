use std::collections::BTreeMap;
use std::fmt;

use rdf_model::{PrimType, Term};
use sparql_frontend::{CompareOp, QueryForm, SortOrder, TriplePattern};

/// Name of the synthetic column every view keys on (the subject term).
pub const KEY_COLUMN: &str = "key";

/// Whether a pattern or filter sits in the required part of the query or
/// inside an OPTIONAL group (at any nesting depth).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Required,
    Optional,
}

/// One column of a view: the key column or one predicate of the subject's
/// pattern group.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnDef {
    pub name: String,
    pub ty: PrimType,
    /// Predicate columns may hold several values per subject; the key never does.
    pub multi_valued: bool,
    /// Required columns must be present for a row to belong to the view at
    /// all. A column introduced in an OPTIONAL nested deeper than the view's
    /// own patterns is nullable instead.
    pub required: bool,
}

/// A view over the property table: one row set per distinct subject term,
/// named R1, R2, ... in first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewDef {
    /// 1-based index; the view is named `R{index}`.
    pub index: usize,
    pub subject: Term,
    pub columns: Vec<ColumnDef>,
}

impl ViewDef {
    pub fn name(&self) -> String {
        format!("R{}", self.index)
    }

    pub fn column(&self, name: &str) -> Option<&ColumnDef> {
        self.columns.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinKind {
    Inner,
    LeftOuter,
}

/// A join between two views, derived from a pattern whose object is the
/// subject of another view: `subject_view.column = object_view.key`.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinEdge {
    pub subject_view: usize,
    pub column: String,
    pub object_view: usize,
    pub kind: JoinKind,
    pub scope: Scope,
}

impl JoinEdge {
    /// The later of the two views; the join that brings it into the tree.
    pub fn attach_view(&self) -> usize {
        self.subject_view.max(self.object_view)
    }

    pub fn pair(&self) -> (usize, usize) {
        let (a, b) = (self.subject_view, self.object_view);
        (a.min(b), a.max(b))
    }
}

impl fmt::Display for JoinEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            JoinKind::Inner => "inner",
            JoinKind::LeftOuter => "left-outer",
        };
        write!(
            f,
            "R{}.{} = R{}.{} [{}]",
            self.subject_view, self.column, self.object_view, KEY_COLUMN, kind
        )
    }
}

/// A reference to one column of one view.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnRef {
    pub view: usize,
    pub column: String,
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}.{}", self.view, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConditionKind {
    Compare { op: CompareOp, value: Term },
    Regex { pattern: String, flags: String },
    NotNull,
}

/// A single-view predicate applied by a Select node.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectCondition {
    pub view: usize,
    pub column: String,
    pub kind: ConditionKind,
    pub scope: Scope,
    /// Appearance position in the query text, used to order WHERE clauses.
    pub order: usize,
}

impl SelectCondition {
    /// Equality selections sit directly above their relation and may be
    /// folded into a join's ON clause; everything else is applied after the
    /// joins.
    pub fn is_equality(&self) -> bool {
        matches!(
            self.kind,
            ConditionKind::Compare {
                op: CompareOp::Eq,
                ..
            }
        )
    }

    pub fn is_key_equality(&self) -> bool {
        self.is_equality() && self.column == KEY_COLUMN
    }
}

impl fmt::Display for SelectCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ConditionKind::Compare { op, value } => {
                write!(f, "R{}.{} {} {}", self.view, self.column, op.token(), value)
            }
            ConditionKind::Regex { pattern, flags } => {
                if flags.is_empty() {
                    write!(f, "regex(R{}.{}, \"{}\")", self.view, self.column, pattern)
                } else {
                    write!(
                        f,
                        "regex(R{}.{}, \"{}\", \"{}\")",
                        self.view, self.column, pattern, flags
                    )
                }
            }
            ConditionKind::NotNull => write!(f, "R{}.{} is not null", self.view, self.column),
        }
    }
}

/// What a Project node keeps: a column list in query order, or every column
/// of one view (DESCRIBE).
#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Columns(Vec<ColumnRef>),
    AllColumns(usize),
}

/// One ORDER BY key. `position` indexes the projected output row.
#[derive(Debug, Clone, PartialEq)]
pub struct SortKey {
    pub position: usize,
    pub variable: String,
    pub order: SortOrder,
    pub ty: PrimType,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AstNode {
    Relation {
        view: usize,
    },
    Select {
        condition: SelectCondition,
        input: Box<AstNode>,
    },
    Join {
        kind: JoinKind,
        conditions: Vec<JoinEdge>,
        left: Box<AstNode>,
        right: Box<AstNode>,
    },
    Project {
        projection: Projection,
        input: Box<AstNode>,
    },
    Union {
        left: Box<AstNode>,
        right: Box<AstNode>,
    },
    Dedup {
        input: Box<AstNode>,
    },
    Sort {
        keys: Vec<SortKey>,
        input: Box<AstNode>,
    },
}

impl AstNode {
    pub fn children(&self) -> Vec<&AstNode> {
        match self {
            AstNode::Relation { .. } => Vec::new(),
            AstNode::Select { input, .. }
            | AstNode::Project { input, .. }
            | AstNode::Dedup { input }
            | AstNode::Sort { input, .. } => vec![input],
            AstNode::Join { left, right, .. } | AstNode::Union { left, right } => {
                vec![left, right]
            }
        }
    }

    /// Number of Relation leaves below (and including) this node.
    pub fn relation_count(&self) -> usize {
        match self {
            AstNode::Relation { .. } => 1,
            _ => self.children().iter().map(|c| c.relation_count()).sum(),
        }
    }

    fn write_indented(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        let pad = "  ".repeat(depth);
        match self {
            AstNode::Relation { view } => writeln!(f, "{pad}relation R{view}"),
            AstNode::Select { condition, input } => {
                writeln!(f, "{pad}select {condition}")?;
                input.write_indented(f, depth + 1)
            }
            AstNode::Join {
                kind, conditions, ..
            } => {
                let kind = match kind {
                    JoinKind::Inner => "inner",
                    JoinKind::LeftOuter => "left outer",
                };
                let conds: Vec<String> = conditions
                    .iter()
                    .map(|e| format!("R{}.{} = R{}.{}", e.subject_view, e.column, e.object_view, KEY_COLUMN))
                    .collect();
                writeln!(f, "{pad}join {} on {}", kind, conds.join(" and "))?;
                for child in self.children() {
                    child.write_indented(f, depth + 1)?;
                }
                Ok(())
            }
            AstNode::Project { projection, input } => {
                match projection {
                    Projection::Columns(cols) => {
                        let cols: Vec<String> = cols.iter().map(|c| c.to_string()).collect();
                        writeln!(f, "{pad}project {}", cols.join(", "))?;
                    }
                    Projection::AllColumns(view) => writeln!(f, "{pad}project R{view}.*")?,
                }
                input.write_indented(f, depth + 1)
            }
            AstNode::Union { left, right } => {
                writeln!(f, "{pad}union")?;
                left.write_indented(f, depth + 1)?;
                right.write_indented(f, depth + 1)
            }
            AstNode::Dedup { input } => {
                writeln!(f, "{pad}dedup")?;
                input.write_indented(f, depth + 1)
            }
            AstNode::Sort { keys, input } => {
                let keys: Vec<String> = keys
                    .iter()
                    .map(|k| match k.order {
                        SortOrder::Asc => format!("?{}", k.variable),
                        SortOrder::Desc => format!("?{} desc", k.variable),
                    })
                    .collect();
                writeln!(f, "{pad}sort {}", keys.join(", "))?;
                input.write_indented(f, depth + 1)
            }
        }
    }
}

impl fmt::Display for AstNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_indented(f, 0)
    }
}

/// The plan for one branch of the query (UNION queries have two).
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPlan {
    /// Subject term and its patterns, in first-appearance order. Entry `i`
    /// corresponds to view `views[i]`.
    pub subject_map: Vec<(Term, Vec<TriplePattern>)>,
    pub views: Vec<ViewDef>,
    pub edges: Vec<JoinEdge>,
    pub selections: Vec<SelectCondition>,
    /// Variable name to (view index, column name).
    pub bindings: BTreeMap<String, (usize, String)>,
    /// The branch subtree, rooted at its Project node.
    pub root: AstNode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedQuery {
    pub form: QueryForm,
    pub projected: Vec<String>,
    pub branches: Vec<BranchPlan>,
    pub ast: AstNode,
    pub distinct: bool,
    pub reduced: bool,
    pub order_by: Vec<SortKey>,
    pub limit: Option<u64>,
}

impl PlannedQuery {
    pub fn join_count(&self) -> usize {
        self.branches.iter().map(|b| b.edges.len()).sum()
    }

    pub fn view(&self, index: usize) -> Option<&ViewDef> {
        self.branches
            .iter()
            .flat_map(|b| b.views.iter())
            .find(|v| v.index == index)
    }

    /// Text dump of the plan: subject map, views, join edges and the
    /// operator tree, as shown by the `explain` command.
    pub fn explain(&self) -> String {
        let mut out = String::new();
        for branch in &self.branches {
            for (term, patterns) in &branch.subject_map {
                let view = branch
                    .views
                    .iter()
                    .find(|v| v.subject == *term)
                    .map(|v| v.name())
                    .unwrap_or_default();
                out.push_str(&format!(
                    "subject {view} <- {term} ({} pattern{})\n",
                    patterns.len(),
                    if patterns.len() == 1 { "" } else { "s" }
                ));
            }
        }
        for branch in &self.branches {
            for view in &branch.views {
                let cols: Vec<String> = view
                    .columns
                    .iter()
                    .map(|c| format!("{}:{}", c.name, c.ty.name()))
                    .collect();
                out.push_str(&format!("view {}({})\n", view.name(), cols.join(", ")));
            }
        }
        for branch in &self.branches {
            for edge in &branch.edges {
                out.push_str(&format!("join {edge}\n"));
            }
        }
        out.push_str(&self.ast.to_string());
        if let Some(limit) = self.limit {
            out.push_str(&format!("limit {limit}\n"));
        }
        out
    }
}
