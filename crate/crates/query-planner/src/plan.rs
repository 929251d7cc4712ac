use std::collections::BTreeMap;

use rdf_model::{PredicateTypeMap, PrimType, Term};
use sparql_frontend::{CompareOp, Filter, GraphPattern, QueryForm, SparqlQuery, TriplePattern};

use crate::types::{
    AstNode, BranchPlan, ColumnDef, ColumnRef, ConditionKind, JoinEdge, JoinKind, PlannedQuery,
    Projection, Scope, SelectCondition, SortKey, ViewDef, KEY_COLUMN,
};
use crate::PlanError;

struct FlatPattern {
    pattern: TriplePattern,
    scope: Scope,
    order: usize,
    /// OPTIONAL nesting depth: 0 for the required group, +1 per level.
    depth: usize,
}

struct FlatFilter {
    filter: Filter,
    scope: Scope,
    order: usize,
}

fn flatten_group(
    group: &GraphPattern,
    depth: usize,
    counter: &mut usize,
    patterns: &mut Vec<FlatPattern>,
    filters: &mut Vec<FlatFilter>,
) {
    let scope = if depth == 0 {
        Scope::Required
    } else {
        Scope::Optional
    };
    let mut next = || {
        let order = *counter;
        *counter += 1;
        order
    };
    for pattern in &group.patterns {
        patterns.push(FlatPattern {
            pattern: pattern.clone(),
            scope,
            order: next(),
            depth,
        });
    }
    for filter in &group.filters {
        filters.push(FlatFilter {
            filter: filter.clone(),
            scope,
            order: next(),
        });
    }
    for optional in &group.optionals {
        flatten_group(optional, depth + 1, counter, patterns, filters);
    }
}

fn contains_union(group: &GraphPattern) -> bool {
    !group.unions.is_empty() || group.optionals.iter().any(contains_union)
}

fn merge_groups(outer: &GraphPattern, branch: &GraphPattern) -> GraphPattern {
    GraphPattern {
        patterns: outer
            .patterns
            .iter()
            .chain(&branch.patterns)
            .cloned()
            .collect(),
        filters: outer
            .filters
            .iter()
            .chain(&branch.filters)
            .cloned()
            .collect(),
        optionals: outer
            .optionals
            .iter()
            .chain(&branch.optionals)
            .cloned()
            .collect(),
        unions: Vec::new(),
    }
}

fn predicate_name(term: &Term) -> Result<String, PlanError> {
    match term {
        Term::Uri(u) => Ok(u.compact.clone()),
        Term::Variable(v) => Err(PlanError::VariablePredicate(v.clone())),
        _ => Err(PlanError::UnsupportedShape("non-URI predicate".into())),
    }
}

/// Plan one branch: build the subject map, derive views, detect join edges,
/// bind variables, collect selections and assemble the branch subtree.
fn plan_branch(
    group: &GraphPattern,
    form: QueryForm,
    describe_target: Option<&Term>,
    projected: &[String],
    type_map: &PredicateTypeMap,
    view_offset: usize,
    in_union: bool,
) -> Result<BranchPlan, PlanError> {
    let mut counter = 0;
    let mut flat_patterns = Vec::new();
    let mut flat_filters = Vec::new();
    flatten_group(group, 0, &mut counter, &mut flat_patterns, &mut flat_filters);

    for fp in &flat_patterns {
        predicate_name(&fp.pattern.predicate)?;
    }

    // Subject map: one entry per distinct subject term, in first-appearance
    // order. A DESCRIBE target that never appears as a subject still gets a
    // view so its whole row can be fetched.
    let mut entries: Vec<(Term, Vec<usize>)> = Vec::new();
    for (i, fp) in flat_patterns.iter().enumerate() {
        match entries
            .iter_mut()
            .find(|(term, _)| *term == fp.pattern.subject)
        {
            Some((_, ids)) => ids.push(i),
            None => entries.push((fp.pattern.subject.clone(), vec![i])),
        }
    }
    if let Some(target) = describe_target {
        if !entries.iter().any(|(term, _)| term == target) {
            entries.push((target.clone(), Vec::new()));
        }
    }
    if entries.is_empty() {
        return Err(PlanError::UnsupportedShape("empty WHERE group".into()));
    }
    let n = entries.len();

    let view_index = |term: &Term| -> Option<usize> {
        entries
            .iter()
            .position(|(t, _)| t == term)
            .map(|i| view_offset + i + 1)
    };

    // A view made only of OPTIONAL patterns is itself optional: joining it
    // in must not discard rows of the basic graph.
    let optional_view = |global: usize| -> bool {
        let ids = &entries[global - view_offset - 1].1;
        !ids.is_empty() && ids.iter().all(|&pi| flat_patterns[pi].depth > 0)
    };

    // Join edges: a pattern whose object is the subject of another view joins
    // the two views. The join is left-outer when either side of the boundary
    // is optional. Several patterns linking the same pair collapse into the
    // first one's edge, and the repetition makes the join inner.
    let mut edges: Vec<JoinEdge> = Vec::new();
    let mut pair_counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for fp in &flat_patterns {
        let Some(object_view) = view_index(&fp.pattern.object) else {
            continue;
        };
        let subject_view = view_index(&fp.pattern.subject).expect("subject always has a view");
        if subject_view == object_view {
            return Err(PlanError::SelfJoin);
        }
        let pair = (
            subject_view.min(object_view),
            subject_view.max(object_view),
        );
        let count = pair_counts.entry(pair).or_insert(0);
        *count += 1;
        if *count == 1 {
            let outer = fp.scope == Scope::Optional || optional_view(pair.1);
            edges.push(JoinEdge {
                subject_view,
                column: predicate_name(&fp.pattern.predicate)?,
                object_view,
                kind: if outer {
                    JoinKind::LeftOuter
                } else {
                    JoinKind::Inner
                },
                scope: fp.scope,
            });
        } else {
            let edge = edges
                .iter_mut()
                .find(|e| e.pair() == pair)
                .expect("pair seen before");
            edge.kind = JoinKind::Inner;
        }
    }

    // Every view after the first must share a key with an earlier one.
    for j in 2..=n {
        let global = view_offset + j;
        if !edges.iter().any(|e| e.attach_view() == global) {
            return Err(PlanError::CartesianProduct {
                view: format!("R{global}"),
                subject: entries[j - 1].0.to_string(),
            });
        }
    }

    // A view's own depth is the shallowest of its patterns; columns from
    // deeper OPTIONAL levels are nullable, the rest must be present.
    let mut views = Vec::new();
    for (i, (subject, pattern_ids)) in entries.iter().enumerate() {
        let view_depth = pattern_ids
            .iter()
            .map(|&pi| flat_patterns[pi].depth)
            .min()
            .unwrap_or(0);
        let mut columns = vec![ColumnDef {
            name: KEY_COLUMN.to_string(),
            ty: PrimType::Str,
            multi_valued: false,
            required: true,
        }];
        for &pi in pattern_ids {
            let name = predicate_name(&flat_patterns[pi].pattern.predicate)?;
            match columns.iter_mut().find(|c| c.name == name) {
                Some(def) => {
                    def.required = def.required || flat_patterns[pi].depth == view_depth;
                }
                None => columns.push(ColumnDef {
                    ty: type_map.column_type(&name),
                    name,
                    multi_valued: true,
                    required: flat_patterns[pi].depth == view_depth,
                }),
            }
        }
        views.push(ViewDef {
            index: view_offset + i + 1,
            subject: subject.clone(),
            columns,
        });
    }

    // Variables bind to (view, column): the first object occurrence wins,
    // and subject-only variables bind to their own view's key.
    let mut bindings: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for fp in &flat_patterns {
        if let Term::Variable(v) = &fp.pattern.object {
            let subject_view = view_index(&fp.pattern.subject).expect("subject always has a view");
            bindings
                .entry(v.clone())
                .or_insert((subject_view, predicate_name(&fp.pattern.predicate)?));
        }
    }
    for (i, (subject, _)) in entries.iter().enumerate() {
        if let Term::Variable(v) = subject {
            bindings
                .entry(v.clone())
                .or_insert((view_offset + i + 1, KEY_COLUMN.to_string()));
        }
    }

    let mut selections: Vec<SelectCondition> = Vec::new();
    for (i, (subject, pattern_ids)) in entries.iter().enumerate() {
        if !matches!(subject, Term::Variable(_)) {
            let (scope, order) = pattern_ids
                .first()
                .map(|&pi| (flat_patterns[pi].scope, flat_patterns[pi].order))
                .unwrap_or((Scope::Required, 0));
            selections.push(SelectCondition {
                view: view_offset + i + 1,
                column: KEY_COLUMN.to_string(),
                kind: ConditionKind::Compare {
                    op: CompareOp::Eq,
                    value: subject.clone(),
                },
                scope,
                order,
            });
        }
    }
    for fp in &flat_patterns {
        if matches!(fp.pattern.object, Term::Variable(_)) {
            continue;
        }
        if view_index(&fp.pattern.object).is_some() {
            continue;
        }
        selections.push(SelectCondition {
            view: view_index(&fp.pattern.subject).expect("subject always has a view"),
            column: predicate_name(&fp.pattern.predicate)?,
            kind: ConditionKind::Compare {
                op: CompareOp::Eq,
                value: fp.pattern.object.clone(),
            },
            scope: fp.scope,
            order: fp.order,
        });
    }
    for ff in &flat_filters {
        let var = ff.filter.variable();
        let Some((view, column)) = bindings.get(var) else {
            return Err(PlanError::Unbound(var.to_string()));
        };
        let kind = match &ff.filter {
            Filter::Comparison { op, constant, .. } => ConditionKind::Compare {
                op: *op,
                value: constant.clone(),
            },
            Filter::Regex { pattern, flags, .. } => ConditionKind::Regex {
                pattern: pattern.clone(),
                flags: flags.clone(),
            },
            Filter::Bound { .. } => ConditionKind::NotNull,
        };
        selections.push(SelectCondition {
            view: *view,
            column: column.clone(),
            kind,
            scope: ff.scope,
            order: ff.order,
        });
    }
    selections.sort_by_key(|s| s.order);

    // Equality selections sit directly above their relation; everything else
    // is applied after the joins, last-appearing topmost.
    let pushed: Vec<&SelectCondition> = selections.iter().filter(|s| s.is_equality()).collect();
    let hoisted: Vec<&SelectCondition> = selections.iter().filter(|s| !s.is_equality()).collect();

    let view_subtree = |global: usize| -> AstNode {
        let mut node = AstNode::Relation { view: global };
        for sel in pushed.iter().filter(|s| s.view == global) {
            node = AstNode::Select {
                condition: (*sel).clone(),
                input: Box::new(node),
            };
        }
        node
    };

    let mut tree = view_subtree(view_offset + 1);
    for j in 2..=n {
        let global = view_offset + j;
        let conditions: Vec<JoinEdge> = edges
            .iter()
            .filter(|e| e.attach_view() == global)
            .cloned()
            .collect();
        let kind = if conditions.iter().any(|e| e.kind == JoinKind::Inner) {
            JoinKind::Inner
        } else {
            JoinKind::LeftOuter
        };
        tree = AstNode::Join {
            kind,
            conditions,
            left: Box::new(tree),
            right: Box::new(view_subtree(global)),
        };
    }
    for sel in &hoisted {
        tree = AstNode::Select {
            condition: (*sel).clone(),
            input: Box::new(tree),
        };
    }

    let projection = match form {
        QueryForm::Select => {
            let mut cols = Vec::new();
            for var in projected {
                let Some((view, column)) = bindings.get(var) else {
                    return Err(if in_union {
                        PlanError::UnionProjection(var.clone())
                    } else {
                        PlanError::Unbound(var.clone())
                    });
                };
                cols.push(ColumnRef {
                    view: *view,
                    column: column.clone(),
                });
            }
            Projection::Columns(cols)
        }
        QueryForm::Describe => {
            let target = describe_target.ok_or_else(|| {
                PlanError::UnsupportedShape("DESCRIBE without a target".into())
            })?;
            Projection::AllColumns(view_index(target).expect("target always has a view"))
        }
    };
    let root = AstNode::Project {
        projection,
        input: Box::new(tree),
    };

    let subject_map = entries
        .into_iter()
        .map(|(term, ids)| {
            let patterns = ids
                .into_iter()
                .map(|pi| flat_patterns[pi].pattern.clone())
                .collect();
            (term, patterns)
        })
        .collect();

    Ok(BranchPlan {
        subject_map,
        views,
        edges,
        selections,
        bindings,
        root,
    })
}

fn column_type_of(branches: &[BranchPlan], var: &str) -> PrimType {
    for branch in branches {
        if let Some((view, column)) = branch.bindings.get(var) {
            if let Some(def) = branch
                .views
                .iter()
                .find(|v| v.index == *view)
                .and_then(|v| v.column(column))
            {
                return def.ty;
            }
        }
    }
    PrimType::Str
}

/// Turn a parsed query into a relational plan over property-table views.
pub fn plan_query(
    query: &SparqlQuery,
    type_map: &PredicateTypeMap,
) -> Result<PlannedQuery, PlanError> {
    let root = &query.root;
    if root.optionals.iter().any(contains_union) {
        return Err(PlanError::UnsupportedShape("UNION inside OPTIONAL".into()));
    }
    if root.unions.len() > 1 {
        return Err(PlanError::UnsupportedShape(
            "more than one UNION per group".into(),
        ));
    }

    let branch_groups: Vec<GraphPattern> = if let Some((left, right)) = root.unions.first() {
        if query.form == QueryForm::Describe {
            return Err(PlanError::UnsupportedShape("UNION in DESCRIBE".into()));
        }
        if contains_union(left) || contains_union(right) {
            return Err(PlanError::UnsupportedShape("nested UNION".into()));
        }
        let outer = GraphPattern {
            patterns: root.patterns.clone(),
            filters: root.filters.clone(),
            optionals: root.optionals.clone(),
            unions: Vec::new(),
        };
        vec![merge_groups(&outer, left), merge_groups(&outer, right)]
    } else {
        vec![root.clone()]
    };

    let in_union = branch_groups.len() > 1;
    let mut branches = Vec::new();
    let mut offset = 0;
    for group in &branch_groups {
        let branch = plan_branch(
            group,
            query.form,
            query.describe_target.as_ref(),
            &query.projected,
            type_map,
            offset,
            in_union,
        )?;
        offset += branch.views.len();
        branches.push(branch);
    }

    let mut ast = if branches.len() == 2 {
        AstNode::Union {
            left: Box::new(branches[0].root.clone()),
            right: Box::new(branches[1].root.clone()),
        }
    } else {
        branches[0].root.clone()
    };
    if query.distinct || query.reduced {
        ast = AstNode::Dedup {
            input: Box::new(ast),
        };
    }

    let mut order_by = Vec::new();
    for (var, order) in &query.order_by {
        let Some(position) = query.projected.iter().position(|p| p == var) else {
            return Err(PlanError::OrderByNotProjected(var.clone()));
        };
        order_by.push(SortKey {
            position,
            variable: var.clone(),
            order: *order,
            ty: column_type_of(&branches, var),
        });
    }
    if !order_by.is_empty() {
        ast = AstNode::Sort {
            keys: order_by.clone(),
            input: Box::new(ast),
        };
    }

    Ok(PlannedQuery {
        form: query.form,
        projected: query.projected.clone(),
        branches,
        ast,
        distinct: query.distinct,
        reduced: query.reduced,
        order_by,
        limit: query.limit,
    })
}
