//! Driving a physical plan against a property table.
//!
//! Each stage runs as one engine job. Scan stages materialize their input
//! splits from the table, one split per region, or a single bloom-checked
//! row fetch for a constant subject; every later stage consumes the output
//! records of the stages it depends on. Rows travel between stages as JSON
//! arrays of slots, one slot per view column: absent, a single encoded
//! value, or the full value list of a multi-valued column.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use query_planner::{
    BranchPlan, ConditionKind, JoinKind, PlannedQuery, Projection, SelectCondition, SortKey,
    KEY_COLUMN,
};
use rdf_model::{coerce_constant, typed_compare, typed_equal, PrimType, PrimitiveValue, Term};
use regex::Regex;
use serde::{Deserialize, Serialize};
use sparql_frontend::{CompareOp, SortOrder};
use storage::{BlockStats, PropertyTable};

use crate::engine::{run_job, ExecError, ExecMetrics, KeyValue, MapFn, MrJob, ReduceFn};
use crate::plan::{
    branch_projection, compile_physical, FinalizeOp, PhysicalPlan, StageKind, ALL_CELLS_COLUMN,
};

/// Records per input split for stages fed by earlier stages.
const SPLIT_RECORDS: usize = 1024;
/// Reducer count for intermediate stages. Fixed so that output bytes do not
/// depend on the parallelism degree.
const FANOUT_REDUCERS: usize = 4;

/// One cell of an intermediate row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SlotValue {
    One(String),
    Many(Vec<String>),
}

pub type Row = Vec<Option<SlotValue>>;

fn decode_or_str(enc: &str) -> PrimitiveValue {
    PrimitiveValue::decode(enc).unwrap_or_else(|| PrimitiveValue::Str(enc.to_string()))
}

fn canon(enc: &str) -> String {
    decode_or_str(enc).canonical()
}

/// Output text of one slot: absent cells render empty, single values by
/// their canonical form, longer value lists as a sorted JSON array.
pub fn render_slot(slot: &Option<SlotValue>) -> String {
    match slot {
        None => String::new(),
        Some(SlotValue::One(enc)) => canon(enc),
        Some(SlotValue::Many(values)) => {
            if values.len() == 1 {
                canon(&values[0])
            } else {
                let mut texts: Vec<String> = values.iter().map(|v| canon(v)).collect();
                texts.sort();
                serde_json::to_string(&texts).expect("strings serialize")
            }
        }
    }
}

pub fn render_row(row: &Row) -> Vec<String> {
    row.iter().map(render_slot).collect()
}

fn parse_row(text: &str) -> Result<Row, String> {
    serde_json::from_str(text).map_err(|e| format!("row record: {e}"))
}

fn row_json(row: &Row) -> String {
    serde_json::to_string(row).expect("rows serialize")
}

/// Column bookkeeping for one view: schema order, which columns must be
/// present, which expand into one logical row per value, and cell types.
#[derive(Debug)]
struct ViewLayout {
    index: usize,
    columns: Vec<String>,
    required: Vec<String>,
    expanded: BTreeSet<String>,
    types: BTreeMap<String, PrimType>,
}

impl ViewLayout {
    fn column_type(&self, column: &str) -> PrimType {
        self.types.get(column).copied().unwrap_or(PrimType::Str)
    }
}

/// Slot arithmetic for one branch: accumulated rows concatenate the views
/// in join order, so each view's columns occupy a fixed slot range.
#[derive(Debug)]
struct BranchLayout {
    views: Vec<ViewLayout>,
}

impl BranchLayout {
    fn build(branch: &BranchPlan) -> Self {
        let describe_view = match branch_projection(branch) {
            Projection::AllColumns(v) => Some(*v),
            Projection::Columns(_) => None,
        };
        let views = branch
            .views
            .iter()
            .map(|view| {
                let mut columns: Vec<String> =
                    view.columns.iter().map(|c| c.name.clone()).collect();
                if describe_view == Some(view.index) {
                    columns.push(ALL_CELLS_COLUMN.to_string());
                }
                let required = view
                    .columns
                    .iter()
                    .filter(|c| c.required && c.name != KEY_COLUMN)
                    .map(|c| c.name.clone())
                    .collect();
                let mut expanded = BTreeSet::new();
                for edge in &branch.edges {
                    if edge.subject_view == view.index {
                        expanded.insert(edge.column.clone());
                    }
                }
                for sel in &branch.selections {
                    if sel.view == view.index && sel.column != KEY_COLUMN {
                        expanded.insert(sel.column.clone());
                    }
                }
                let types = view.columns.iter().map(|c| (c.name.clone(), c.ty)).collect();
                ViewLayout {
                    index: view.index,
                    columns,
                    required,
                    expanded,
                    types,
                }
            })
            .collect();
        BranchLayout { views }
    }

    fn view(&self, index: usize) -> &ViewLayout {
        self.views
            .iter()
            .find(|v| v.index == index)
            .expect("view belongs to this branch")
    }

    fn offset(&self, index: usize) -> usize {
        let mut at = 0;
        for view in &self.views {
            if view.index == index {
                return at;
            }
            at += view.columns.len();
        }
        panic!("view R{index} not in branch");
    }

    fn slot(&self, view: usize, column: &str) -> usize {
        let position = self
            .view(view)
            .columns
            .iter()
            .position(|c| c == column)
            .expect("column belongs to view");
        self.offset(view) + position
    }
}

/// A residual condition compiled against row slots, with its regex built
/// once up front.
enum CondEval {
    Compare {
        slot: usize,
        op: CompareOp,
        constant: PrimitiveValue,
        ty: PrimType,
    },
    Regex {
        slot: usize,
        re: Regex,
    },
    NotNull {
        slot: usize,
    },
}

fn build_cond(sel: &SelectCondition, slot: usize, ty: PrimType) -> Result<CondEval, ExecError> {
    match &sel.kind {
        ConditionKind::Compare { op, value } => Ok(CondEval::Compare {
            slot,
            op: *op,
            constant: coerce_constant(value, ty),
            ty,
        }),
        ConditionKind::Regex { pattern, flags } => {
            if let Some(bad) = flags.chars().find(|c| *c != 'i') {
                return Err(ExecError::Plan(format!("unsupported regex flag {bad:?}")));
            }
            let expr = if flags.contains('i') {
                format!("(?i){pattern}")
            } else {
                pattern.clone()
            };
            let re = Regex::new(&expr)
                .map_err(|e| ExecError::Plan(format!("regex {pattern:?}: {e}")))?;
            Ok(CondEval::Regex { slot, re })
        }
        ConditionKind::NotNull => Ok(CondEval::NotNull { slot }),
    }
}

fn op_holds(op: CompareOp, ord: Ordering) -> bool {
    match op {
        CompareOp::Eq => ord == Ordering::Equal,
        CompareOp::Ne => ord != Ordering::Equal,
        CompareOp::Lt => ord == Ordering::Less,
        CompareOp::Gt => ord == Ordering::Greater,
        CompareOp::Le => ord != Ordering::Greater,
        CompareOp::Ge => ord != Ordering::Less,
    }
}

fn value_passes(eval: &CondEval, enc: &str) -> bool {
    match eval {
        CondEval::Compare {
            op, constant, ty, ..
        } => op_holds(*op, typed_compare(&decode_or_str(enc), constant, *ty)),
        CondEval::Regex { re, .. } => re.is_match(&canon(enc)),
        CondEval::NotNull { .. } => true,
    }
}

/// Absent cells satisfy every condition except a bound check: a row padded
/// by a left-outer join must survive ordinary comparisons.
fn cond_passes(eval: &CondEval, row: &Row) -> bool {
    let slot = match eval {
        CondEval::Compare { slot, .. } | CondEval::Regex { slot, .. } | CondEval::NotNull { slot } => {
            *slot
        }
    };
    match &row[slot] {
        None => !matches!(eval, CondEval::NotNull { .. }),
        Some(SlotValue::One(enc)) => value_passes(eval, enc),
        Some(SlotValue::Many(values)) => values.iter().any(|v| value_passes(eval, v)),
    }
}

enum ProjEval {
    Columns(Vec<usize>),
    /// Whole-row output: one (key, column, value) row per cell.
    Describe { key_slot: usize, cells_slot: usize },
}

struct Finalizer {
    conds: Vec<CondEval>,
    projection: ProjEval,
}

fn build_finalizer(op: &FinalizeOp, layout: &BranchLayout) -> Result<Finalizer, ExecError> {
    let conds = op
        .residuals
        .iter()
        .map(|sel| {
            let slot = layout.slot(sel.view, &sel.column);
            let ty = layout.view(sel.view).column_type(&sel.column);
            build_cond(sel, slot, ty)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let projection = match &op.projection {
        Projection::Columns(refs) => ProjEval::Columns(
            refs.iter()
                .map(|r| layout.slot(r.view, &r.column))
                .collect(),
        ),
        Projection::AllColumns(view) => ProjEval::Describe {
            key_slot: layout.slot(*view, KEY_COLUMN),
            cells_slot: layout.slot(*view, ALL_CELLS_COLUMN),
        },
    };
    Ok(Finalizer { conds, projection })
}

impl Finalizer {
    fn apply(&self, row: &Row) -> Result<Vec<Row>, String> {
        if !self.conds.iter().all(|c| cond_passes(c, row)) {
            return Ok(Vec::new());
        }
        match &self.projection {
            ProjEval::Columns(slots) => Ok(vec![slots.iter().map(|&s| row[s].clone()).collect()]),
            ProjEval::Describe {
                key_slot,
                cells_slot,
            } => {
                let (Some(SlotValue::One(key_enc)), Some(SlotValue::One(cells_json))) =
                    (&row[*key_slot], &row[*cells_slot])
                else {
                    return Ok(Vec::new());
                };
                let cells: BTreeMap<String, Vec<String>> = serde_json::from_str(cells_json)
                    .map_err(|e| format!("row cell map: {e}"))?;
                let mut out = Vec::new();
                for (col, values) in cells {
                    let col_enc = PrimitiveValue::Str(col).encode();
                    for enc in values {
                        out.push(vec![
                            Some(SlotValue::One(key_enc.clone())),
                            Some(SlotValue::One(col_enc.clone())),
                            Some(SlotValue::One(enc)),
                        ]);
                    }
                }
                Ok(out)
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ScanRecord {
    key: String,
    cols: BTreeMap<String, Vec<String>>,
}

fn constant_row_key(term: &Term) -> String {
    coerce_constant(term, PrimType::Str).canonical()
}

/// Materialize scan input splits. A constant subject fetches one row with
/// per-block bloom checks; otherwise the whole table is read and rows are
/// grouped into one split per region.
fn scan_splits(
    table: &PropertyTable,
    view: &ViewLayout,
    key: Option<&Term>,
    all_cells: bool,
) -> Result<(Vec<Vec<String>>, BlockStats), ExecError> {
    let storage_err =
        |e: storage::StorageError| ExecError::Plan(format!("scan R{}: {e}", view.index));
    let record = |key: String, cols: BTreeMap<String, Vec<String>>| {
        serde_json::to_string(&ScanRecord { key, cols }).expect("scan records serialize")
    };
    match key {
        Some(term) => {
            let row = constant_row_key(term);
            let cols: Option<BTreeSet<String>> = if all_cells {
                None
            } else {
                Some(
                    view.columns
                        .iter()
                        .filter(|c| *c != KEY_COLUMN && *c != ALL_CELLS_COLUMN)
                        .cloned()
                        .collect(),
                )
            };
            let cols = cols.filter(|set| !set.is_empty());
            let (cells, stats) = table.get_cells(&row, cols.as_ref()).map_err(storage_err)?;
            let mut records = Vec::new();
            if !cells.is_empty() {
                let encoded = cells
                    .into_iter()
                    .map(|(c, vs)| (c, vs.iter().map(|v| v.encode()).collect()))
                    .collect();
                records.push(record(row, encoded));
            }
            Ok((vec![records], stats))
        }
        None => {
            let (cells, stats) = table.scan(None, None).map_err(storage_err)?;
            let mut rows: BTreeMap<String, BTreeMap<String, Vec<(u64, String)>>> = BTreeMap::new();
            for (ck, value) in cells {
                if !all_cells && !view.columns.iter().any(|c| *c == ck.col) {
                    continue;
                }
                rows.entry(ck.row)
                    .or_default()
                    .entry(ck.col)
                    .or_default()
                    .push((ck.ts, value.encode()));
            }
            let mut splits: Vec<Vec<String>> = vec![Vec::new(); table.region_count()];
            for (row, cols) in rows {
                let encoded = cols
                    .into_iter()
                    .map(|(c, mut vs)| {
                        vs.sort_by(|a, b| b.0.cmp(&a.0));
                        (c, vs.into_iter().map(|(_, e)| e).collect())
                    })
                    .collect();
                let region = table.region_for_key(&row);
                splits[region].push(record(row, encoded));
            }
            Ok((splits, stats))
        }
    }
}

/// The scan map: key equality, required-column presence, pushed equality
/// filters, then expansion of join and filter columns into logical rows.
fn scan_map<'a>(
    view: &'a ViewLayout,
    key_consts: Vec<PrimitiveValue>,
    col_consts: BTreeMap<String, Vec<PrimitiveValue>>,
) -> MapFn<'a> {
    Box::new(move |record| {
        let rec: ScanRecord =
            serde_json::from_str(record).map_err(|e| format!("scan record: {e}"))?;
        let key_cell = PrimitiveValue::Str(rec.key.clone());
        if !key_consts
            .iter()
            .all(|c| typed_equal(&key_cell, c, PrimType::Str))
        {
            return Ok(Vec::new());
        }
        for col in &view.required {
            if rec.cols.get(col).map_or(true, |v| v.is_empty()) {
                return Ok(Vec::new());
            }
        }
        let mut base: Row = Vec::with_capacity(view.columns.len());
        let mut expansions: Vec<(usize, Vec<String>)> = Vec::new();
        for (i, col) in view.columns.iter().enumerate() {
            if col == KEY_COLUMN {
                base.push(Some(SlotValue::One(key_cell.encode())));
                continue;
            }
            if col == ALL_CELLS_COLUMN {
                base.push(Some(SlotValue::One(
                    serde_json::to_string(&rec.cols).expect("cell map serializes"),
                )));
                continue;
            }
            let ty = view.column_type(col);
            let values = rec.cols.get(col).cloned().unwrap_or_default();
            let survivors: Vec<String> = match col_consts.get(col) {
                Some(consts) => values
                    .into_iter()
                    .filter(|enc| {
                        let cell = decode_or_str(enc);
                        consts.iter().all(|c| typed_equal(&cell, c, ty))
                    })
                    .collect(),
                None => values,
            };
            if survivors.is_empty() {
                if view.required.contains(col) {
                    return Ok(Vec::new());
                }
                base.push(None);
            } else if view.expanded.contains(col) {
                base.push(None);
                expansions.push((i, survivors));
            } else {
                base.push(Some(SlotValue::Many(survivors)));
            }
        }
        let mut rows = vec![base];
        for (slot, choices) in &expansions {
            let mut next = Vec::with_capacity(rows.len() * choices.len());
            for row in rows {
                for choice in choices {
                    let mut expanded = row.clone();
                    expanded[*slot] = Some(SlotValue::One(choice.clone()));
                    next.push(expanded);
                }
            }
            rows = next;
        }
        Ok(rows
            .into_iter()
            .map(|r| (rec.key.clone(), row_json(&r)))
            .collect())
    })
}

/// Where each join edge reads its key component: a global slot on the
/// accumulated left row and a local slot on the attached view's row.
struct EdgeSlots {
    left: usize,
    right: usize,
}

fn join_map<'a>(kind: JoinKind, slots: Vec<EdgeSlots>) -> MapFn<'a> {
    Box::new(move |record| {
        let (tag, json) = record
            .split_once('\t')
            .ok_or_else(|| "join record missing origin tag".to_string())?;
        let left = match tag {
            "L" => true,
            "R" => false,
            other => return Err(format!("unknown join origin tag {other:?}")),
        };
        let row = parse_row(json)?;
        let mut parts: Vec<&str> = Vec::with_capacity(slots.len());
        for es in &slots {
            let idx = if left { es.left } else { es.right };
            match row.get(idx) {
                Some(Some(SlotValue::One(enc))) => parts.push(enc),
                Some(Some(SlotValue::Many(v))) if v.len() == 1 => parts.push(&v[0]),
                Some(None) => {
                    // a null key component never matches; left rows of an
                    // outer join still need padding, everything else drops
                    return Ok(if left && kind == JoinKind::LeftOuter {
                        vec![(format!("n:{json}"), record.to_string())]
                    } else {
                        Vec::new()
                    });
                }
                Some(Some(SlotValue::Many(_))) => {
                    return Err("join column was not expanded".to_string())
                }
                None => return Err("join slot out of range".to_string()),
            }
        }
        let key = format!("k:{}", serde_json::to_string(&parts).expect("key serializes"));
        Ok(vec![(key, record.to_string())])
    })
}

fn join_reduce<'a>(kind: JoinKind, right_width: usize) -> ReduceFn<'a> {
    Box::new(move |_key, values| {
        let mut lefts: Vec<Row> = Vec::new();
        let mut rights: Vec<Row> = Vec::new();
        for value in values {
            if let Some(json) = value.strip_prefix("L\t") {
                lefts.push(parse_row(json)?);
            } else if let Some(json) = value.strip_prefix("R\t") {
                rights.push(parse_row(json)?);
            } else {
                return Err("join value missing origin tag".to_string());
            }
        }
        let mut out: Vec<KeyValue> = Vec::new();
        let mut emit = |row: &Row| {
            let json = row_json(row);
            out.push((json.clone(), json));
        };
        if rights.is_empty() {
            if kind == JoinKind::LeftOuter {
                for mut row in lefts {
                    row.extend(std::iter::repeat(None).take(right_width));
                    emit(&row);
                }
            }
        } else {
            for left in &lefts {
                for right in &rights {
                    let mut row = left.clone();
                    row.extend(right.iter().cloned());
                    emit(&row);
                }
            }
        }
        Ok(out)
    })
}

fn chunked<'a>(inputs: impl Iterator<Item = &'a Vec<String>>) -> Vec<Vec<String>> {
    let mut splits = Vec::new();
    let mut current = Vec::new();
    for values in inputs {
        for value in values {
            current.push(value.clone());
            if current.len() == SPLIT_RECORDS {
                splits.push(std::mem::take(&mut current));
            }
        }
    }
    if !current.is_empty() {
        splits.push(current);
    }
    splits
}

/// Tag and split join inputs. Left splits come first so that reducers see
/// left rows before right rows within every key group.
fn tagged_splits(left: &[String], right: &[String]) -> Vec<Vec<String>> {
    let mut splits = Vec::new();
    for (values, tag) in [(left, "L"), (right, "R")] {
        for chunk in values.chunks(SPLIT_RECORDS) {
            splits.push(chunk.iter().map(|v| format!("{tag}\t{v}")).collect());
        }
    }
    splits
}

fn cmp_slots(a: &Option<SlotValue>, b: &Option<SlotValue>, ty: PrimType) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(SlotValue::One(x)), Some(SlotValue::One(y))) => {
            typed_compare(&decode_or_str(x), &decode_or_str(y), ty)
        }
        _ => render_slot(a).cmp(&render_slot(b)),
    }
}

fn cmp_rows(a: &Row, b: &Row, keys: &[SortKey]) -> Ordering {
    for key in keys {
        let ord = cmp_slots(&a[key.position], &b[key.position], key.ty);
        let ord = match key.order {
            SortOrder::Asc => ord,
            SortOrder::Desc => ord.reverse(),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    render_row(a).cmp(&render_row(b))
}

/// Compile and run a query in one call.
pub fn execute(
    table: &PropertyTable,
    plan: &PlannedQuery,
    parallelism: usize,
) -> Result<(Vec<Vec<String>>, ExecMetrics), ExecError> {
    let physical = compile_physical(plan);
    execute_physical(table, plan, &physical, parallelism)
}

/// Run every stage of a physical plan in order and render the terminal
/// stage outputs: one Vec<String> per result row, absent cells as empty
/// strings, multi-valued cells as sorted JSON arrays.
pub fn execute_physical(
    table: &PropertyTable,
    plan: &PlannedQuery,
    physical: &PhysicalPlan,
    parallelism: usize,
) -> Result<(Vec<Vec<String>>, ExecMetrics), ExecError> {
    let layouts: Vec<BranchLayout> = plan.branches.iter().map(BranchLayout::build).collect();
    let owner = |view: usize| -> &BranchLayout {
        layouts
            .iter()
            .find(|l| l.views.iter().any(|v| v.index == view))
            .expect("every view belongs to a branch")
    };

    let mut stage_values: Vec<Vec<String>> = Vec::with_capacity(physical.stages.len());
    let mut metrics = ExecMetrics::default();
    for desc in &physical.stages {
        let (pairs, stage_metrics) = match &desc.kind {
            StageKind::Scan {
                view,
                key,
                pushed,
                all_cells,
            } => {
                let layout = owner(*view).view(*view);
                let (splits, stats) = scan_splits(table, layout, key.as_ref(), *all_cells)?;
                let mut key_consts = Vec::new();
                let mut col_consts: BTreeMap<String, Vec<PrimitiveValue>> = BTreeMap::new();
                for sel in pushed {
                    let ConditionKind::Compare { value, .. } = &sel.kind else {
                        continue;
                    };
                    if sel.column == KEY_COLUMN {
                        key_consts.push(coerce_constant(value, PrimType::Str));
                    } else {
                        let ty = layout.column_type(&sel.column);
                        col_consts
                            .entry(sel.column.clone())
                            .or_default()
                            .push(coerce_constant(value, ty));
                    }
                }
                let job = MrJob::new(
                    desc.name.as_str(),
                    table.region_count(),
                    scan_map(layout, key_consts, col_consts),
                );
                let (pairs, mut m) = run_job(&job, &splits, parallelism)?;
                m.blocks_read = stats.read;
                m.blocks_skipped = stats.skipped;
                (pairs, m)
            }
            StageKind::Join {
                attach,
                kind,
                edges,
            } => {
                let layout = owner(*attach);
                let attached = layout.view(*attach);
                let slots: Vec<EdgeSlots> = edges
                    .iter()
                    .map(|e| {
                        if e.subject_view == *attach {
                            EdgeSlots {
                                left: layout.slot(e.object_view, KEY_COLUMN),
                                right: attached
                                    .columns
                                    .iter()
                                    .position(|c| *c == e.column)
                                    .expect("edge column belongs to attached view"),
                            }
                        } else {
                            EdgeSlots {
                                left: layout.slot(e.subject_view, &e.column),
                                right: 0,
                            }
                        }
                    })
                    .collect();
                let splits = tagged_splits(
                    &stage_values[desc.inputs[0]],
                    &stage_values[desc.inputs[1]],
                );
                let job = MrJob::new(desc.name.as_str(), FANOUT_REDUCERS, join_map(*kind, slots))
                    .with_reduce(join_reduce(*kind, attached.columns.len()));
                run_job(&job, &splits, parallelism)?
            }
            StageKind::Project { finalize } => {
                let fin = build_finalizer(finalize, &layouts[finalize.branch])?;
                let splits = chunked(desc.inputs.iter().map(|&i| &stage_values[i]));
                let map: MapFn = Box::new(move |record| {
                    let row = parse_row(record)?;
                    let rows = fin.apply(&row)?;
                    Ok(rows
                        .iter()
                        .map(|r| {
                            let json = row_json(r);
                            (json.clone(), json)
                        })
                        .collect())
                });
                let job = MrJob::new(desc.name.as_str(), FANOUT_REDUCERS, map);
                run_job(&job, &splits, parallelism)?
            }
            StageKind::Dedup { finalize } => {
                let fin = finalize
                    .as_ref()
                    .map(|op| build_finalizer(op, &layouts[op.branch]))
                    .transpose()?;
                let splits = chunked(desc.inputs.iter().map(|&i| &stage_values[i]));
                let map: MapFn = Box::new(move |record| {
                    let row = parse_row(record)?;
                    let rows = match &fin {
                        Some(f) => f.apply(&row)?,
                        None => vec![row],
                    };
                    Ok(rows
                        .iter()
                        .map(|r| {
                            let rendered = serde_json::to_string(&render_row(r))
                                .expect("strings serialize");
                            (rendered, row_json(r))
                        })
                        .collect())
                });
                let reduce: ReduceFn =
                    Box::new(|key, values| Ok(vec![(key.to_string(), values[0].clone())]));
                let job = MrJob::new(desc.name.as_str(), FANOUT_REDUCERS, map).with_reduce(reduce);
                run_job(&job, &splits, parallelism)?
            }
            StageKind::Sort {
                keys,
                limit,
                finalize,
            } => {
                let fin = finalize
                    .as_ref()
                    .map(|op| build_finalizer(op, &layouts[op.branch]))
                    .transpose()?;
                let splits = chunked(desc.inputs.iter().map(|&i| &stage_values[i]));
                let map: MapFn = Box::new(move |record| {
                    let row = parse_row(record)?;
                    let rows = match &fin {
                        Some(f) => f.apply(&row)?,
                        None => vec![row],
                    };
                    Ok(rows.iter().map(|r| (String::new(), row_json(r))).collect())
                });
                let keys = keys.clone();
                let limit = *limit;
                let reduce: ReduceFn = Box::new(move |_key, values| {
                    let mut rows = values
                        .iter()
                        .map(|v| parse_row(v))
                        .collect::<Result<Vec<_>, _>>()?;
                    rows.sort_by(|a, b| cmp_rows(a, b, &keys));
                    if let Some(n) = limit {
                        rows.truncate(n);
                    }
                    Ok(rows.iter().map(|r| (String::new(), row_json(r))).collect())
                });
                let job = MrJob::new(desc.name.as_str(), 1, map).with_reduce(reduce);
                run_job(&job, &splits, parallelism)?
            }
        };
        metrics.push(stage_metrics);
        stage_values.push(pairs.into_iter().map(|(_, v)| v).collect());
    }

    let mut rows = Vec::new();
    for t in physical.terminal_stages() {
        for value in &stage_values[t] {
            let row: Row = serde_json::from_str(value)
                .map_err(|e| ExecError::Plan(format!("result row: {e}")))?;
            rows.push(render_row(&row));
        }
    }
    Ok((rows, metrics))
}
