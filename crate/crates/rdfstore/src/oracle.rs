//! Reference query evaluation over a flat triple list.
//!
//! The engine answers queries through per-subject views joined by simulated
//! MapReduce stages; this module answers the same queries by brute force over
//! the raw three-column triple list, matching one pattern at a time and
//! merging the bindings. Matching n patterns costs exactly n - 1 merges, and
//! the evaluator counts them so tests can assert it.
//!
//! The evaluator is single threaded on purpose: it exists to be obviously
//! correct, not fast. It assumes each (subject, predicate) pair holds a
//! single value; on multi-valued data the engine renders value lists while
//! this module multiplies rows, and the two stop being comparable.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rdf_model::{
    coerce_constant, infer_primitive, parse_ntriples, typed_compare, typed_equal,
    PredicateTypeMap, PrefixTable, PrimType, PrimitiveValue, Term,
};
use sparql_frontend::{
    CompareOp, Filter, GraphPattern, QueryForm, SortOrder, SparqlQuery, TriplePattern,
};

/// One loaded statement: subject and predicate in compact form, object
/// coerced the same way the bulk loader stores it.
#[derive(Debug, Clone)]
pub struct OracleTriple {
    pub subject: String,
    pub predicate: String,
    pub value: PrimitiveValue,
}

/// The whole dataset as one flat list, in document order.
#[derive(Debug, Default)]
pub struct TripleTable {
    triples: Vec<OracleTriple>,
    type_map: PredicateTypeMap,
}

impl TripleTable {
    /// Parse an N-Triples document with the same compaction and literal
    /// typing rules the bulk loader applies.
    pub fn from_ntriples(text: &str, prefixes: &PrefixTable) -> Result<TripleTable, String> {
        let parsed = parse_ntriples(text).map_err(|e| e.to_string())?;
        let mut triples = Vec::with_capacity(parsed.len());
        for mut triple in parsed {
            prefixes.compress(&mut triple.subject);
            prefixes.compress(&mut triple.predicate);
            let value = match &mut triple.object {
                Term::Uri(u) => {
                    prefixes.compress(u);
                    PrimitiveValue::Str(u.compact.clone())
                }
                Term::Literal(lit) => infer_primitive(lit).0,
                other => return Err(format!("unexpected object term {other}")),
            };
            triples.push(OracleTriple {
                subject: triple.subject.compact,
                predicate: triple.predicate.compact,
                value,
            });
        }
        let mut type_map = PredicateTypeMap::new();
        for t in &triples {
            type_map.observe(&t.predicate, t.value.prim_type());
        }
        Ok(TripleTable { triples, type_map })
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[OracleTriple] {
        &self.triples
    }

    pub fn type_map(&self) -> &PredicateTypeMap {
        &self.type_map
    }

    pub fn subject_count(&self) -> usize {
        let mut subjects: Vec<&str> = self.triples.iter().map(|t| t.subject.as_str()).collect();
        subjects.sort_unstable();
        subjects.dedup();
        subjects.len()
    }

    /// Every cell of one subject, newest value first within each column.
    pub fn cells(&self, subject: &str) -> BTreeMap<String, Vec<PrimitiveValue>> {
        let mut out: BTreeMap<String, Vec<PrimitiveValue>> = BTreeMap::new();
        for t in self.triples.iter().rev() {
            if t.subject == subject {
                out.entry(t.predicate.clone())
                    .or_default()
                    .push(t.value.clone());
            }
        }
        out
    }
}

/// Rendered result rows plus the number of pattern merges performed.
#[derive(Debug)]
pub struct OracleOutput {
    pub rows: Vec<Vec<String>>,
    pub joins: usize,
}

/// A value slot in a binding row. `Unmatched` marks a variable introduced by
/// an OPTIONAL pattern that found nothing; it renders empty and satisfies
/// every condition except bound().
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Slot {
    Unmatched,
    Value(PrimitiveValue),
}

impl Slot {
    pub(crate) fn value(&self) -> Option<&PrimitiveValue> {
        match self {
            Slot::Unmatched => None,
            Slot::Value(v) => Some(v),
        }
    }
}

pub(crate) type BindingRow = BTreeMap<String, Slot>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum PatternScope {
    Required,
    Optional,
}

#[derive(Debug, Clone)]
pub(crate) struct FlatPattern {
    pub pattern: TriplePattern,
    pub scope: PatternScope,
}

#[derive(Debug, Clone)]
pub(crate) struct FlatFilter {
    pub filter: Filter,
    pub scope: PatternScope,
}

pub(crate) fn flatten(
    group: &GraphPattern,
    depth: usize,
    patterns: &mut Vec<FlatPattern>,
    filters: &mut Vec<FlatFilter>,
) {
    let scope = if depth == 0 {
        PatternScope::Required
    } else {
        PatternScope::Optional
    };
    for pattern in &group.patterns {
        patterns.push(FlatPattern {
            pattern: pattern.clone(),
            scope,
        });
    }
    for filter in &group.filters {
        filters.push(FlatFilter {
            filter: filter.clone(),
            scope,
        });
    }
    for optional in &group.optionals {
        flatten(optional, depth + 1, patterns, filters);
    }
}

fn contains_union(group: &GraphPattern) -> bool {
    !group.unions.is_empty() || group.optionals.iter().any(contains_union)
}

fn merge_groups(outer: &GraphPattern, branch: &GraphPattern) -> GraphPattern {
    GraphPattern {
        patterns: outer.patterns.iter().chain(&branch.patterns).cloned().collect(),
        filters: outer.filters.iter().chain(&branch.filters).cloned().collect(),
        optionals: outer.optionals.iter().chain(&branch.optionals).cloned().collect(),
        unions: Vec::new(),
    }
}

/// UNION splits the query into independent branch groups; everything outside
/// the union is evaluated inside each branch.
pub(crate) fn branch_groups(query: &SparqlQuery) -> Result<Vec<GraphPattern>, String> {
    let root = &query.root;
    if root.optionals.iter().any(contains_union) {
        return Err("UNION inside OPTIONAL is not supported".into());
    }
    if root.unions.len() > 1 {
        return Err("more than one UNION per group is not supported".into());
    }
    if let Some((left, right)) = root.unions.first() {
        if query.form == QueryForm::Describe {
            return Err("UNION in DESCRIBE is not supported".into());
        }
        if contains_union(left) || contains_union(right) {
            return Err("nested UNION is not supported".into());
        }
        let outer = GraphPattern {
            patterns: root.patterns.clone(),
            filters: root.filters.clone(),
            optionals: root.optionals.clone(),
            unions: Vec::new(),
        };
        Ok(vec![merge_groups(&outer, left), merge_groups(&outer, right)])
    } else {
        Ok(vec![root.clone()])
    }
}

/// The storage text of a constant term used in subject position.
pub(crate) fn subject_text(term: &Term) -> String {
    coerce_constant(term, PrimType::Str).canonical()
}

pub(crate) fn predicate_name(term: &Term) -> Result<String, String> {
    match term {
        Term::Uri(u) => Ok(u.compact.clone()),
        Term::Variable(v) => Err(format!("variable predicate ?{v} is not supported")),
        other => Err(format!("unsupported predicate term {other}")),
    }
}

/// A condition applied after all patterns matched. Gaps pass everything
/// except a bound() check, which is what lets an unmatched OPTIONAL row
/// survive its own conditions.
pub(crate) enum LateCond {
    Compare {
        var: String,
        op: CompareOp,
        constant: PrimitiveValue,
        ty: PrimType,
    },
    Regex {
        var: String,
        regex: regex::Regex,
    },
    Bound {
        var: String,
    },
}

pub(crate) fn build_regex(pattern: &str, flags: &str) -> Result<regex::Regex, String> {
    let source = match flags {
        "" => pattern.to_string(),
        "i" => format!("(?i){pattern}"),
        other => return Err(format!("unsupported regex flags {other:?}")),
    };
    regex::Regex::new(&source).map_err(|e| format!("bad regex: {e}"))
}

pub(crate) fn late_cond_passes(cond: &LateCond, row: &BindingRow) -> bool {
    match cond {
        LateCond::Compare { var, op, constant, ty } => match row.get(var).and_then(Slot::value) {
            None => true,
            Some(value) => {
                let ord = typed_compare(value, constant, *ty);
                match op {
                    CompareOp::Eq => typed_equal(value, constant, *ty),
                    CompareOp::Ne => !typed_equal(value, constant, *ty),
                    CompareOp::Lt => ord == Ordering::Less,
                    CompareOp::Gt => ord == Ordering::Greater,
                    CompareOp::Le => ord != Ordering::Greater,
                    CompareOp::Ge => ord != Ordering::Less,
                }
            }
        },
        LateCond::Regex { var, regex } => match row.get(var).and_then(Slot::value) {
            None => true,
            Some(value) => regex.is_match(&value.canonical()),
        },
        LateCond::Bound { var } => matches!(row.get(var), Some(Slot::Value(_))),
    }
}

/// Where each variable first receives a value: the first pattern whose
/// object is the variable wins; a variable seen only in subject position
/// binds through its patterns' subject slot.
pub(crate) struct VarOrigins {
    pub object_of: BTreeMap<String, usize>,
    pub subject_of: BTreeMap<String, Vec<usize>>,
}

pub(crate) fn var_origins(patterns: &[FlatPattern]) -> VarOrigins {
    let mut object_of = BTreeMap::new();
    let mut subject_of: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, fp) in patterns.iter().enumerate() {
        if let Term::Variable(v) = &fp.pattern.object {
            object_of.entry(v.clone()).or_insert(i);
        }
        if let Term::Variable(v) = &fp.pattern.subject {
            subject_of.entry(v.clone()).or_default().push(i);
        }
    }
    VarOrigins { object_of, subject_of }
}

/// The column type a variable's comparisons run under: the type of the
/// predicate that binds it, string for subject-bound variables.
pub(crate) fn var_type(
    var: &str,
    patterns: &[FlatPattern],
    origins: &VarOrigins,
    type_map: &PredicateTypeMap,
) -> Result<PrimType, String> {
    if let Some(&pi) = origins.object_of.get(var) {
        let pred = predicate_name(&patterns[pi].pattern.predicate)?;
        Ok(type_map.column_type(&pred))
    } else {
        Ok(PrimType::Str)
    }
}

enum SubjectRule {
    Var(String),
    Const(String),
}

/// How one pattern's object position behaves during matching.
enum ObjectRule {
    /// Bind or check a variable.
    Var(String),
    /// The object names another pattern's subject, so the match must meet
    /// that subject's storage text whatever the pattern's scope.
    Link(String),
    /// Constant object on a required pattern: the match itself enforces it.
    Eq(PrimitiveValue, PrimType),
    /// Constant object on an OPTIONAL pattern: the match accepts any value
    /// and a deferred equality decides afterwards, so a failing value drops
    /// the row while a missing one only leaves a gap.
    Deferred(String),
}

/// One pattern compiled for matching. The equality lists come from required
/// FILTERs and run at match time, mirroring the engine's scan-time filters:
/// failing them inside an OPTIONAL leaves a gap instead of killing the row.
struct PreparedPattern {
    subject: SubjectRule,
    subject_eq: Vec<String>,
    predicate: String,
    object: ObjectRule,
    object_eq: Vec<(PrimitiveValue, PrimType)>,
    scope: PatternScope,
}

struct PreparedBranch {
    patterns: Vec<PreparedPattern>,
    late: Vec<LateCond>,
    origins: VarOrigins,
}

fn prepare_branch(
    group: &GraphPattern,
    type_map: &PredicateTypeMap,
) -> Result<PreparedBranch, String> {
    let mut flat = Vec::new();
    let mut filters = Vec::new();
    flatten(group, 0, &mut flat, &mut filters);
    let origins = var_origins(&flat);

    // Distinct subject terms; an object naming one of them is a join link.
    let mut subject_terms: Vec<&Term> = Vec::new();
    for fp in &flat {
        if !subject_terms.iter().any(|t| **t == fp.pattern.subject) {
            subject_terms.push(&fp.pattern.subject);
        }
    }

    let mut object_eq: BTreeMap<usize, Vec<(PrimitiveValue, PrimType)>> = BTreeMap::new();
    let mut subject_eq: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut late = Vec::new();

    for ff in &filters {
        let var = ff.filter.variable().to_string();
        let ty = var_type(&var, &flat, &origins, type_map)?;
        match &ff.filter {
            Filter::Comparison { op: CompareOp::Eq, constant, .. }
                if ff.scope == PatternScope::Required =>
            {
                if let Some(&pi) = origins.object_of.get(&var) {
                    object_eq
                        .entry(pi)
                        .or_default()
                        .push((coerce_constant(constant, ty), ty));
                } else if let Some(pis) = origins.subject_of.get(&var) {
                    let text = subject_text(constant);
                    for &pi in pis {
                        subject_eq.entry(pi).or_default().push(text.clone());
                    }
                } else {
                    return Err(format!("?{var} in FILTER is not bound"));
                }
            }
            Filter::Comparison { op, constant, .. } => late.push(LateCond::Compare {
                var,
                op: *op,
                constant: coerce_constant(constant, ty),
                ty,
            }),
            Filter::Regex { pattern, flags, .. } => late.push(LateCond::Regex {
                var,
                regex: build_regex(pattern, flags)?,
            }),
            Filter::Bound { .. } => late.push(LateCond::Bound { var }),
        }
    }

    let mut patterns = Vec::with_capacity(flat.len());
    for (i, fp) in flat.iter().enumerate() {
        let subject = match &fp.pattern.subject {
            Term::Variable(v) => SubjectRule::Var(v.clone()),
            other => SubjectRule::Const(subject_text(other)),
        };
        let predicate = predicate_name(&fp.pattern.predicate)?;
        let ty = type_map.column_type(&predicate);
        let object = match &fp.pattern.object {
            Term::Variable(v) => ObjectRule::Var(v.clone()),
            term if subject_terms.iter().any(|t| *t == term) => {
                ObjectRule::Link(subject_text(term))
            }
            term if fp.scope == PatternScope::Optional => {
                let hidden = format!("#eq{i}");
                late.push(LateCond::Compare {
                    var: hidden.clone(),
                    op: CompareOp::Eq,
                    constant: coerce_constant(term, ty),
                    ty,
                });
                ObjectRule::Deferred(hidden)
            }
            term => ObjectRule::Eq(coerce_constant(term, ty), ty),
        };
        patterns.push(PreparedPattern {
            subject,
            subject_eq: subject_eq.get(&i).cloned().unwrap_or_default(),
            predicate,
            object,
            object_eq: object_eq.get(&i).cloned().unwrap_or_default(),
            scope: fp.scope,
        });
    }
    Ok(PreparedBranch {
        patterns,
        late,
        origins,
    })
}

/// All binding rows one pattern produces on its own.
fn pattern_relation(p: &PreparedPattern, table: &TripleTable) -> Vec<BindingRow> {
    let mut rows = Vec::new();
    for t in table.triples() {
        if t.predicate != p.predicate {
            continue;
        }
        match &p.subject {
            SubjectRule::Const(text) if *text != t.subject => continue,
            _ => {}
        }
        if p.subject_eq.iter().any(|text| *text != t.subject) {
            continue;
        }
        match &p.object {
            ObjectRule::Link(text) => {
                if !typed_equal(
                    &t.value,
                    &PrimitiveValue::Str(text.clone()),
                    PrimType::Str,
                ) {
                    continue;
                }
            }
            ObjectRule::Eq(konst, ty) => {
                if !typed_equal(&t.value, konst, *ty) {
                    continue;
                }
            }
            _ => {}
        }
        if !p
            .object_eq
            .iter()
            .all(|(konst, ty)| typed_equal(&t.value, konst, *ty))
        {
            continue;
        }
        let mut row = BindingRow::new();
        if let SubjectRule::Var(v) = &p.subject {
            row.insert(v.clone(), Slot::Value(PrimitiveValue::Str(t.subject.clone())));
        }
        match &p.object {
            ObjectRule::Var(v) => {
                // A pattern like ?x p ?x must see the same text twice.
                if let Some(Slot::Value(prev)) = row.get(v) {
                    if prev.encode() != t.value.encode() {
                        continue;
                    }
                }
                row.insert(v.clone(), Slot::Value(t.value.clone()));
            }
            ObjectRule::Deferred(hidden) => {
                row.insert(hidden.clone(), Slot::Value(t.value.clone()));
            }
            _ => {}
        }
        rows.push(row);
    }
    rows
}

/// Variables a pattern introduces into the row schema.
fn pattern_vars(p: &PreparedPattern) -> Vec<String> {
    let mut vars = Vec::new();
    if let SubjectRule::Var(v) = &p.subject {
        vars.push(v.clone());
    }
    match &p.object {
        ObjectRule::Var(v) => vars.push(v.clone()),
        ObjectRule::Deferred(hidden) => vars.push(hidden.clone()),
        _ => {}
    }
    vars
}

fn rows_agree(a: &BindingRow, b: &BindingRow, shared: &[String]) -> bool {
    shared.iter().all(|v| match (a.get(v), b.get(v)) {
        (Some(Slot::Value(x)), Some(Slot::Value(y))) => x.encode() == y.encode(),
        _ => false,
    })
}

/// Merge the accumulated rows with one pattern's relation: an inner join for
/// required patterns, a left outer join for OPTIONAL ones where unmatched
/// rows keep gaps in the pattern's fresh variables.
fn merge_pattern(
    acc: Vec<BindingRow>,
    schema: &mut BTreeSet<String>,
    p: &PreparedPattern,
    relation: &[BindingRow],
) -> Vec<BindingRow> {
    let vars = pattern_vars(p);
    let shared: Vec<String> = vars.iter().filter(|v| schema.contains(*v)).cloned().collect();
    let fresh: Vec<String> = vars.iter().filter(|v| !schema.contains(*v)).cloned().collect();
    let mut out = Vec::new();
    for row in acc {
        let mut matched = false;
        for rel in relation {
            if rows_agree(&row, rel, &shared) {
                let mut merged = row.clone();
                for (k, v) in rel {
                    merged.entry(k.clone()).or_insert_with(|| v.clone());
                }
                out.push(merged);
                matched = true;
            }
        }
        if !matched && p.scope == PatternScope::Optional {
            let mut padded = row;
            for v in &fresh {
                padded.insert(v.clone(), Slot::Unmatched);
            }
            out.push(padded);
        }
    }
    for v in vars {
        schema.insert(v);
    }
    out
}

/// Binding rows for one branch group, plus the merges it took.
fn eval_branch(
    branch: &PreparedBranch,
    table: &TripleTable,
) -> (Vec<BindingRow>, usize) {
    let mut schema = BTreeSet::new();
    let mut joins = 0;
    let mut rows: Vec<BindingRow> = vec![BindingRow::new()];
    for (i, p) in branch.patterns.iter().enumerate() {
        let relation = pattern_relation(p, table);
        if i == 0 {
            for v in pattern_vars(p) {
                schema.insert(v);
            }
            rows = relation;
        } else {
            joins += 1;
            rows = merge_pattern(rows, &mut schema, p, &relation);
        }
    }
    rows.retain(|row| branch.late.iter().all(|c| late_cond_passes(c, row)));
    (rows, joins)
}

/// Projected but not yet rendered row: one optional value per output column.
pub(crate) type ValueRow = Vec<Option<PrimitiveValue>>;

pub(crate) fn render_value_row(row: &ValueRow) -> Vec<String> {
    row.iter()
        .map(|v| v.as_ref().map(PrimitiveValue::canonical).unwrap_or_default())
        .collect()
}

fn cmp_values(a: &Option<PrimitiveValue>, b: &Option<PrimitiveValue>, ty: PrimType) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => typed_compare(x, y, ty),
    }
}

/// DISTINCT, ORDER BY and LIMIT over projected rows. Sorting compares the
/// key columns by type with gaps first, descending keys reversed, and breaks
/// ties on the rendered row; a LIMIT without ORDER BY still sorts rows into
/// canonical text order so truncation is deterministic.
pub(crate) fn apply_tail(
    mut rows: Vec<ValueRow>,
    query: &SparqlQuery,
    key_types: &BTreeMap<String, PrimType>,
) -> Vec<Vec<String>> {
    if query.distinct || query.reduced {
        let mut seen = BTreeSet::new();
        rows.retain(|row| seen.insert(render_value_row(row)));
    }
    let keys: Vec<(usize, SortOrder, PrimType)> = query
        .order_by
        .iter()
        .filter_map(|(var, order)| {
            let position = query.projected.iter().position(|p| p == var)?;
            let ty = key_types.get(var).copied().unwrap_or(PrimType::Str);
            Some((position, *order, ty))
        })
        .collect();
    if !keys.is_empty() || query.limit.is_some() {
        rows.sort_by(|a, b| {
            for (position, order, ty) in &keys {
                let ord = cmp_values(&a[*position], &b[*position], *ty);
                let ord = match order {
                    SortOrder::Asc => ord,
                    SortOrder::Desc => ord.reverse(),
                };
                if ord != Ordering::Equal {
                    return ord;
                }
            }
            render_value_row(a).cmp(&render_value_row(b))
        });
    }
    if let Some(limit) = query.limit {
        rows.truncate(limit as usize);
    }
    rows.iter().map(render_value_row).collect()
}

/// Sort key types for the tail, first branch that binds a variable wins.
pub(crate) fn collect_key_types(
    query: &SparqlQuery,
    groups: &[GraphPattern],
    type_map: &PredicateTypeMap,
) -> Result<BTreeMap<String, PrimType>, String> {
    let mut out = BTreeMap::new();
    for (var, _) in &query.order_by {
        if out.contains_key(var) {
            continue;
        }
        for group in groups {
            let mut flat = Vec::new();
            let mut filters = Vec::new();
            flatten(group, 0, &mut flat, &mut filters);
            let origins = var_origins(&flat);
            if origins.object_of.contains_key(var) || origins.subject_of.contains_key(var) {
                out.insert(var.clone(), var_type(var, &flat, &origins, type_map)?);
                break;
            }
        }
    }
    Ok(out)
}

fn project_select(
    rows: &[BindingRow],
    projected: &[String],
) -> Vec<ValueRow> {
    rows.iter()
        .map(|row| {
            projected
                .iter()
                .map(|var| row.get(var).and_then(Slot::value).cloned())
                .collect()
        })
        .collect()
}

/// DESCRIBE output: one (subject, column, value) row per cell of each row's
/// target subject, columns in name order.
fn project_describe(
    rows: &[BindingRow],
    target: &Term,
    table: &TripleTable,
) -> Vec<ValueRow> {
    let mut out = Vec::new();
    for row in rows {
        let subject = match target {
            Term::Variable(v) => match row.get(v).and_then(Slot::value) {
                Some(value) => value.canonical(),
                None => continue,
            },
            other => subject_text(other),
        };
        for (col, values) in table.cells(&subject) {
            for value in values {
                out.push(vec![
                    Some(PrimitiveValue::Str(subject.clone())),
                    Some(PrimitiveValue::Str(col.clone())),
                    Some(value),
                ]);
            }
        }
    }
    out
}

/// Evaluate a query against the flat triple list and render the result rows
/// exactly as the engine renders its own.
pub fn oracle_eval(query: &SparqlQuery, table: &TripleTable) -> Result<OracleOutput, String> {
    let groups = branch_groups(query)?;
    let mut joins = 0;
    let mut rows: Vec<ValueRow> = Vec::new();
    for group in &groups {
        if group.is_empty() && query.form == QueryForm::Select {
            return Err("empty WHERE group".into());
        }
        let branch = prepare_branch(group, table.type_map())?;
        let (binding_rows, branch_joins) = eval_branch(&branch, table);
        joins += branch_joins;
        match query.form {
            QueryForm::Select => {
                for var in &query.projected {
                    if !branch.origins.object_of.contains_key(var)
                        && !branch.origins.subject_of.contains_key(var)
                    {
                        return Err(format!("?{var} is not bound in every branch"));
                    }
                }
                rows.extend(project_select(&binding_rows, &query.projected));
            }
            QueryForm::Describe => {
                let target = query
                    .describe_target
                    .as_ref()
                    .ok_or_else(|| "DESCRIBE without a target".to_string())?;
                rows.extend(project_describe(&binding_rows, target, table));
            }
        }
    }
    let key_types = collect_key_types(query, &groups, table.type_map())?;
    Ok(OracleOutput {
        rows: apply_tail(rows, query, &key_types),
        joins,
    })
}
