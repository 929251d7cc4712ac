use std::collections::BTreeMap;

use query_planner::{
    AstNode, BranchPlan, ConditionKind, JoinEdge, JoinKind, PlannedQuery, Projection, Scope,
    SelectCondition, ViewDef,
};
use rdf_model::{infer_primitive, PrefixTable, PrimitiveValue, Term};
use sparql_frontend::SortOrder;

use crate::like::translate_regex;

/// The rendered statement plus the view definitions it references.
#[derive(Debug, Clone, PartialEq)]
pub struct SqlQueryText {
    pub statement: String,
    pub views: BTreeMap<String, ViewDef>,
}

fn render_term(term: &Term, prefixes: &PrefixTable) -> String {
    match term {
        Term::Placeholder(name) => format!("\"%{name}%\""),
        Term::Uri(uri) => {
            if uri.compact != uri.full {
                prefixes.colon_form(&uri.compact)
            } else {
                format!("\"<{}>\"", uri.full)
            }
        }
        Term::Literal(lit) => {
            let (value, _, _) = infer_primitive(lit);
            match value {
                PrimitiveValue::Integer(_)
                | PrimitiveValue::Double { .. }
                | PrimitiveValue::Decimal { .. }
                | PrimitiveValue::Boolean(_) => lit.lexical.clone(),
                _ => format!(
                    "\"{}\"",
                    lit.lexical.replace('\\', "\\\\").replace('"', "\\\"")
                ),
            }
        }
        Term::Variable(name) => format!("?{name}"),
    }
}

fn render_condition(sel: &SelectCondition, prefixes: &PrefixTable) -> String {
    let column = format!("R{}.{}", sel.view, prefixes.colon_form(&sel.column));
    match &sel.kind {
        ConditionKind::Compare { op, value } => {
            format!("{column} {} {}", op.token(), render_term(value, prefixes))
        }
        ConditionKind::Regex { pattern, .. } => {
            format!("{column} LIKE \"{}\"", translate_regex(pattern).like)
        }
        ConditionKind::NotNull => format!("{column} IS NOT NULL"),
    }
}

/// Join conditions put the lower-numbered view on the left.
fn render_edge(edge: &JoinEdge, prefixes: &PrefixTable) -> String {
    let column = prefixes.colon_form(&edge.column);
    if edge.object_view < edge.subject_view {
        format!(
            "R{}.key = R{}.{}",
            edge.object_view, edge.subject_view, column
        )
    } else {
        format!(
            "R{}.{} = R{}.key",
            edge.subject_view, column, edge.object_view
        )
    }
}

fn branch_sql(branch: &BranchPlan, plan: &PlannedQuery, prefixes: &PrefixTable) -> String {
    let offset = branch.views[0].index - 1;
    let n = branch.views.len();

    let AstNode::Project { projection, .. } = &branch.root else {
        unreachable!("branch roots always project");
    };
    let select_list = match projection {
        Projection::Columns(cols) => cols
            .iter()
            .map(|c| format!("R{}.{}", c.view, prefixes.colon_form(&c.column)))
            .collect::<Vec<_>>()
            .join(", "),
        Projection::AllColumns(view) => format!("R{view}.*"),
    };
    let distinct = if plan.distinct || plan.reduced {
        "DISTINCT "
    } else {
        ""
    };

    // Key equalities always land in the ON clause of the join that brings
    // their view in; required-scope column equalities follow the join
    // condition there; optional-scope ones go to WHERE, ahead of the
    // non-equality conditions. Without joins everything goes to WHERE.
    let joins = n.saturating_sub(1);
    let mut on_key: Vec<Vec<String>> = vec![Vec::new(); joins];
    let mut on_column: Vec<Vec<String>> = vec![Vec::new(); joins];
    let mut where_tree: Vec<(usize, usize, String)> = Vec::new();
    let mut where_rest: Vec<(usize, String)> = Vec::new();

    for sel in &branch.selections {
        let text = render_condition(sel, prefixes);
        if !sel.is_equality() {
            where_rest.push((sel.order, text));
            continue;
        }
        if joins == 0 {
            where_tree.push((sel.view, sel.order, text));
            continue;
        }
        let local = sel.view - offset;
        let join = if local <= 2 { 0 } else { local - 2 };
        if sel.is_key_equality() {
            on_key[join].push(text);
        } else if sel.scope == Scope::Required {
            on_column[join].push(text);
        } else {
            where_tree.push((sel.view, sel.order, text));
        }
    }
    where_tree.sort_by_key(|(view, order, _)| (*view, *order));
    where_rest.sort_by_key(|(order, _)| *order);

    let mut lines = vec![format!("SELECT {distinct}{select_list}")];
    let mut from = format!("FROM R{}", offset + 1);
    for join in 0..joins {
        let attached = offset + join + 2;
        let edges: Vec<&JoinEdge> = branch
            .edges
            .iter()
            .filter(|e| e.attach_view() == attached)
            .collect();
        let keyword = if edges.iter().any(|e| e.kind == JoinKind::Inner) {
            "JOIN"
        } else {
            "LEFT OUTER JOIN"
        };
        let mut conditions = on_key[join].clone();
        conditions.extend(edges.iter().map(|e| render_edge(e, prefixes)));
        conditions.append(&mut on_column[join]);
        let clause = format!("{keyword} R{attached} ON ({})", conditions.join(" AND "));
        if join == 0 {
            from.push(' ');
            from.push_str(&clause);
        } else {
            lines.push(std::mem::take(&mut from));
            from = clause;
        }
    }
    lines.push(from);

    let mut conditions: Vec<String> = where_tree.into_iter().map(|(_, _, text)| text).collect();
    conditions.extend(where_rest.into_iter().map(|(_, text)| text));
    for (i, condition) in conditions.iter().enumerate() {
        if i == 0 {
            lines.push(format!("WHERE {condition}"));
        } else {
            lines.push(format!("AND {condition}"));
        }
    }
    lines.join("\n")
}

/// Render the whole plan. UNION plans become two complete subqueries;
/// ORDER BY and LIMIT close the statement.
pub fn generate_sql(plan: &PlannedQuery, prefixes: &PrefixTable) -> SqlQueryText {
    let mut statement = plan
        .branches
        .iter()
        .map(|branch| branch_sql(branch, plan, prefixes))
        .collect::<Vec<_>>()
        .join("\nUNION\n");

    if !plan.order_by.is_empty() {
        let keys = plan
            .order_by
            .iter()
            .map(|key| {
                let (view, column) = plan
                    .branches
                    .iter()
                    .find_map(|b| b.bindings.get(&key.variable))
                    .expect("sort keys are bound");
                let column = format!("R{view}.{}", prefixes.colon_form(column));
                match key.order {
                    SortOrder::Asc => column,
                    SortOrder::Desc => format!("{column} DESC"),
                }
            })
            .collect::<Vec<_>>()
            .join(", ");
        statement.push_str(&format!("\nORDER BY {keys}"));
    }
    if let Some(limit) = plan.limit {
        statement.push_str(&format!("\nLIMIT {limit}"));
    }

    let views = plan
        .branches
        .iter()
        .flat_map(|b| b.views.iter())
        .map(|v| (v.name(), v.clone()))
        .collect();
    SqlQueryText { statement, views }
}

#[cfg(test)]
mod tests {
    use super::*;
    use query_planner::plan_query;
    use rdf_model::PredicateTypeMap;
    use sparql_frontend::parse_sparql;

    fn sql(text: &str) -> String {
        let query = parse_sparql(text).expect("query parses");
        let plan = plan_query(&query, &PredicateTypeMap::new()).expect("query plans");
        generate_sql(&plan, &query.prefixes).statement
    }

    #[test]
    fn bare_single_view_query_needs_no_where() {
        let got = sql("SELECT ?c WHERE { ?x <c> ?c . }");
        assert_eq!(got, "SELECT R1.c\nFROM R1");
    }

    #[test]
    fn single_view_selections_fill_the_where_clause() {
        let got = sql(
            "PREFIX ex: <http://example.org/>\n\
             SELECT ?price WHERE { %OfferXYZ% ex:price ?price . %OfferXYZ% ex:valid true . }",
        );
        assert_eq!(
            got,
            "SELECT R1.ex:price\n\
             FROM R1\n\
             WHERE R1.key = \"%OfferXYZ%\"\n\
             AND R1.ex:valid = true"
        );
    }

    #[test]
    fn describe_selects_every_column_of_the_view() {
        let got = sql("DESCRIBE %OfferXYZ%");
        assert_eq!(got, "SELECT R1.*\nFROM R1\nWHERE R1.key = \"%OfferXYZ%\"");
    }

    #[test]
    fn regex_and_bound_filters_render_as_like_and_not_null() {
        let got = sql(
            "PREFIX ex: <http://example.org/>\n\
             SELECT ?name WHERE {\n\
               ?x ex:name ?name .\n\
               ?x ex:city ?city .\n\
               FILTER regex(?city, \"^Aus\")\n\
               FILTER bound(?name)\n\
             }",
        );
        assert_eq!(
            got,
            "SELECT R1.ex:name\n\
             FROM R1\n\
             WHERE R1.ex:city LIKE \"Aus%\"\n\
             AND R1.ex:name IS NOT NULL"
        );
    }

    #[test]
    fn union_emits_two_subqueries_with_shared_tail() {
        let got = sql(
            "PREFIX ex: <http://example.org/>\n\
             SELECT DISTINCT ?label WHERE {\n\
               { ?a ex:label ?label . } UNION { ?b ex:title ?label . }\n\
             } ORDER BY ?label LIMIT 5",
        );
        assert_eq!(
            got,
            "SELECT DISTINCT R1.ex:label\n\
             FROM R1\n\
             UNION\n\
             SELECT DISTINCT R2.ex:title\n\
             FROM R2\n\
             ORDER BY R1.ex:label\n\
             LIMIT 5"
        );
    }

    #[test]
    fn full_uri_constants_are_quoted_and_prefixed_ones_are_not() {
        let got = sql(
            "PREFIX ex: <http://example.org/>\n\
             SELECT ?x WHERE {\n\
               ?x ex:kind ex:Book .\n\
               ?x ex:origin <http://elsewhere.net/place> .\n\
             }",
        );
        assert_eq!(
            got,
            "SELECT R1.key\n\
             FROM R1\n\
             WHERE R1.ex:kind = ex:Book\n\
             AND R1.ex:origin = \"<http://elsewhere.net/place>\""
        );
    }

    #[test]
    fn optional_scope_equalities_move_to_where() {
        let got = sql(
            "PREFIX ex: <http://example.org/>\n\
             SELECT ?name ?city WHERE {\n\
               ?x ex:name ?name .\n\
               OPTIONAL { ?x ex:home ?place . ?place ex:city ?city . ?place ex:kind ex:House . }\n\
             }",
        );
        assert_eq!(
            got,
            "SELECT R1.ex:name, R2.ex:city\n\
             FROM R1 LEFT OUTER JOIN R2 ON (R1.ex:home = R2.key)\n\
             WHERE R2.ex:kind = ex:House"
        );
    }

    #[test]
    fn order_by_desc_and_limit_close_the_statement() {
        let got = sql(
            "PREFIX ex: <http://example.org/>\n\
             SELECT ?thing ?price WHERE { ?thing ex:price ?price . }\n\
             ORDER BY DESC(?price) ?thing LIMIT 3",
        );
        assert!(got.ends_with("ORDER BY R1.ex:price DESC, R1.key\nLIMIT 3"));
    }
}
