//! A second reference evaluator used to cross-check the first.
//!
//! Where the oracle builds one relation per pattern and merges them, this
//! walks the pattern list recursively, extending a single binding row one
//! triple at a time. The two share nothing but the small term helpers and
//! the result tail, so a bug in either one's matching or OPTIONAL handling
//! shows up as a disagreement.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rdf_model::{coerce_constant, typed_compare, typed_equal, PrimType, PrimitiveValue, Term};
use sparql_frontend::{CompareOp, Filter, GraphPattern, QueryForm, SparqlQuery};

use crate::oracle::{
    apply_tail, branch_groups, build_regex, collect_key_types, flatten, predicate_name,
    subject_text, var_origins, var_type, BindingRow, FlatFilter, FlatPattern, PatternScope, Slot,
    TripleTable, ValueRow,
};

pub fn nested_loop_eval(
    query: &SparqlQuery,
    table: &TripleTable,
) -> Result<Vec<Vec<String>>, String> {
    if query.form != QueryForm::Select {
        return Err("the nested-loop evaluator only handles SELECT".into());
    }
    let groups = branch_groups(query)?;
    let mut rows: Vec<ValueRow> = Vec::new();
    for group in &groups {
        rows.extend(eval_group(group, query, table)?);
    }
    let key_types = collect_key_types(query, &groups, table.type_map())?;
    Ok(apply_tail(rows, query, &key_types))
}

struct GroupEval<'a> {
    table: &'a TripleTable,
    patterns: Vec<FlatPattern>,
    /// Extra equalities enforced while matching the pattern that binds the
    /// variable (from required-scope equality filters).
    match_eq: BTreeMap<usize, Vec<(PrimitiveValue, PrimType)>>,
    subject_match_eq: BTreeMap<usize, Vec<String>>,
    /// Object constants of OPTIONAL patterns carry a hidden binding and get
    /// checked after the walk, like every other optional conditional.
    deferred_eq: Vec<(String, PrimitiveValue, PrimType)>,
    late: Vec<(FlatFilter, PrimType)>,
    subject_terms: Vec<Term>,
}

fn eval_group(
    group: &GraphPattern,
    query: &SparqlQuery,
    table: &TripleTable,
) -> Result<Vec<ValueRow>, String> {
    if group.is_empty() {
        return Err("empty WHERE group".into());
    }
    let mut patterns = Vec::new();
    let mut filters = Vec::new();
    flatten(group, 0, &mut patterns, &mut filters);
    let origins = var_origins(&patterns);

    let mut ev = GroupEval {
        table,
        patterns: Vec::new(),
        match_eq: BTreeMap::new(),
        subject_match_eq: BTreeMap::new(),
        deferred_eq: Vec::new(),
        late: Vec::new(),
        subject_terms: Vec::new(),
    };
    for fp in &patterns {
        if !ev.subject_terms.contains(&fp.pattern.subject) {
            ev.subject_terms.push(fp.pattern.subject.clone());
        }
    }
    for ff in filters {
        let var = ff.filter.variable().to_string();
        let ty = var_type(&var, &patterns, &origins, table.type_map())?;
        let required_eq = ff.scope == PatternScope::Required
            && matches!(&ff.filter, Filter::Comparison { op: CompareOp::Eq, .. });
        if required_eq {
            let Filter::Comparison { constant, .. } = &ff.filter else {
                unreachable!()
            };
            if let Some(&pi) = origins.object_of.get(&var) {
                ev.match_eq
                    .entry(pi)
                    .or_default()
                    .push((coerce_constant(constant, ty), ty));
            } else if let Some(pis) = origins.subject_of.get(&var) {
                for &pi in pis {
                    ev.subject_match_eq
                        .entry(pi)
                        .or_default()
                        .push(subject_text(constant));
                }
            } else {
                return Err(format!("?{var} in FILTER is not bound"));
            }
        } else {
            ev.late.push((ff, ty));
        }
    }
    for (i, fp) in patterns.iter().enumerate() {
        let pred = predicate_name(&fp.pattern.predicate)?;
        if fp.scope == PatternScope::Optional
            && !matches!(&fp.pattern.object, Term::Variable(_))
            && !ev.subject_terms.contains(&fp.pattern.object)
        {
            let ty = table.type_map().column_type(&pred);
            ev.deferred_eq.push((
                format!("~eq{i}"),
                coerce_constant(&fp.pattern.object, ty),
                ty,
            ));
        }
    }
    ev.patterns = patterns;

    let mut found = Vec::new();
    ev.descend(0, BindingRow::new(), &mut found);

    let found: Vec<BindingRow> = found
        .into_iter()
        .filter(|row| ev.late_passes(row))
        .collect();

    Ok(found
        .iter()
        .map(|row| {
            query
                .projected
                .iter()
                .map(|var| row.get(var).and_then(Slot::value).cloned())
                .collect()
        })
        .collect())
}

impl GroupEval<'_> {
    fn descend(&self, i: usize, row: BindingRow, out: &mut Vec<BindingRow>) {
        let Some(fp) = self.patterns.get(i) else {
            out.push(row);
            return;
        };
        let mut matched = false;
        for t in self.table.triples() {
            if let Some(next) = self.extend(i, fp, t, &row) {
                matched = true;
                self.descend(i + 1, next, out);
            }
        }
        if !matched && fp.scope == PatternScope::Optional {
            let mut padded = row;
            for var in self.fresh_vars(i, fp, &padded) {
                padded.insert(var, Slot::Unmatched);
            }
            self.descend(i + 1, padded, out);
        }
    }

    fn fresh_vars(&self, i: usize, fp: &FlatPattern, row: &BindingRow) -> Vec<String> {
        let mut vars = Vec::new();
        if let Term::Variable(v) = &fp.pattern.subject {
            if !row.contains_key(v) {
                vars.push(v.clone());
            }
        }
        match &fp.pattern.object {
            Term::Variable(v) if !row.contains_key(v) => vars.push(v.clone()),
            Term::Variable(_) => {}
            other if !self.subject_terms.contains(other) => vars.push(format!("~eq{i}")),
            _ => {}
        }
        vars
    }

    fn extend(
        &self,
        i: usize,
        fp: &FlatPattern,
        t: &crate::oracle::OracleTriple,
        row: &BindingRow,
    ) -> Option<BindingRow> {
        let pred = match &fp.pattern.predicate {
            Term::Uri(u) => &u.compact,
            _ => return None,
        };
        if t.predicate != *pred {
            return None;
        }
        let mut next = row.clone();
        match &fp.pattern.subject {
            Term::Variable(v) => match row.get(v) {
                Some(Slot::Value(PrimitiveValue::Str(s))) if *s == t.subject => {}
                Some(_) => return None,
                None => {
                    next.insert(v.clone(), Slot::Value(PrimitiveValue::Str(t.subject.clone())));
                }
            },
            other => {
                if subject_text(other) != t.subject {
                    return None;
                }
            }
        }
        if let Some(texts) = self.subject_match_eq.get(&i) {
            if texts.iter().any(|text| *text != t.subject) {
                return None;
            }
        }
        match &fp.pattern.object {
            Term::Variable(v) => {
                match row.get(v) {
                    Some(Slot::Value(prev)) if prev.encode() == t.value.encode() => {}
                    Some(_) => return None,
                    None => {
                        next.insert(v.clone(), Slot::Value(t.value.clone()));
                    }
                }
                if let Some(checks) = self.match_eq.get(&i) {
                    if !checks.iter().all(|(k, ty)| typed_equal(&t.value, k, *ty)) {
                        return None;
                    }
                }
            }
            other if self.subject_terms.contains(other) => {
                let expected = PrimitiveValue::Str(subject_text(other));
                if t.value.encode() != expected.encode() {
                    return None;
                }
            }
            other => {
                let pred_ty = self.table.type_map().column_type(&t.predicate);
                let konst = coerce_constant(other, pred_ty);
                if fp.scope == PatternScope::Optional {
                    next.insert(format!("~eq{i}"), Slot::Value(t.value.clone()));
                } else if !typed_equal(&t.value, &konst, pred_ty) {
                    return None;
                }
            }
        }
        Some(next)
    }

    fn late_passes(&self, row: &BindingRow) -> bool {
        for (name, konst, ty) in &self.deferred_eq {
            match row.get(name).and_then(Slot::value) {
                None => {}
                Some(value) => {
                    if !typed_equal(value, konst, *ty) {
                        return false;
                    }
                }
            }
        }
        for (ff, ty) in &self.late {
            let var = ff.filter.variable();
            let value = row.get(var).and_then(Slot::value);
            let pass = match (&ff.filter, value) {
                (Filter::Bound { .. }, v) => v.is_some(),
                (_, None) => true,
                (Filter::Comparison { op, constant, .. }, Some(value)) => {
                    let konst = coerce_constant(constant, *ty);
                    match op {
                        CompareOp::Eq => typed_equal(value, &konst, *ty),
                        CompareOp::Ne => !typed_equal(value, &konst, *ty),
                        CompareOp::Lt => typed_compare(value, &konst, *ty) == Ordering::Less,
                        CompareOp::Gt => typed_compare(value, &konst, *ty) == Ordering::Greater,
                        CompareOp::Le => typed_compare(value, &konst, *ty) != Ordering::Greater,
                        CompareOp::Ge => typed_compare(value, &konst, *ty) != Ordering::Less,
                    }
                }
                (Filter::Regex { pattern, flags, .. }, Some(value)) => {
                    match build_regex(pattern, flags) {
                        Ok(re) => re.is_match(&value.canonical()),
                        Err(_) => false,
                    }
                }
            };
            if !pass {
                return false;
            }
        }
        true
    }
}
