use query_planner::{
    plan_query, AstNode, JoinKind, PlanError, PlannedQuery, Projection, Scope, KEY_COLUMN,
};
use rdf_model::PredicateTypeMap;
use sparql_frontend::parse_sparql;

const PERSON_COUNTRY: &str = include_str!("../../rdfstore/testdata/queries/codebox3.sparql");
const PRODUCT_OFFERS: &str = include_str!("../../rdfstore/testdata/queries/codebox6.sparql");
const MIX: &[(&str, &str, usize)] = &[
    ("q01", include_str!("../../rdfstore/testdata/mix/q01.sparql"), 0),
    ("q02", include_str!("../../rdfstore/testdata/mix/q02.sparql"), 2),
    ("q03", include_str!("../../rdfstore/testdata/mix/q03.sparql"), 0),
    ("q04", include_str!("../../rdfstore/testdata/mix/q04.sparql"), 0),
    ("q05", include_str!("../../rdfstore/testdata/mix/q05.sparql"), 1),
    ("q07", include_str!("../../rdfstore/testdata/mix/q07.sparql"), 4),
    ("q08", include_str!("../../rdfstore/testdata/mix/q08.sparql"), 1),
    ("q09", include_str!("../../rdfstore/testdata/mix/q09.sparql"), 1),
    ("q10", include_str!("../../rdfstore/testdata/mix/q10.sparql"), 1),
    ("q11", include_str!("../../rdfstore/testdata/mix/q11.sparql"), 0),
    ("q12", include_str!("../../rdfstore/testdata/mix/q12.sparql"), 0),
];

fn plan(text: &str) -> PlannedQuery {
    let query = parse_sparql(text).expect("query parses");
    plan_query(&query, &PredicateTypeMap::new()).expect("query plans")
}

/// Walk the tree and fail if a non-equality selection sits below a join.
fn assert_well_formed(node: &AstNode, below_join: bool) {
    match node {
        AstNode::Select { condition, input } => {
            if below_join {
                assert!(
                    condition.is_equality(),
                    "non-equality selection {condition} below a join"
                );
            }
            assert_well_formed(input, below_join);
        }
        AstNode::Join { left, right, .. } => {
            assert_well_formed(left, true);
            assert_well_formed(right, true);
        }
        _ => {
            for child in node.children() {
                assert_well_formed(child, below_join);
            }
        }
    }
}

#[test]
fn person_query_joins_the_country_view() {
    let plan = plan(PERSON_COUNTRY);
    let branch = &plan.branches[0];

    assert_eq!(branch.subject_map.len(), 2);
    assert_eq!(branch.subject_map[0].1.len(), 4);
    assert_eq!(branch.subject_map[1].1.len(), 1);

    let r1 = &branch.views[0];
    let names: Vec<&str> = r1.columns.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(
        names,
        [
            KEY_COLUMN,
            "foaf_firstName",
            "foaf_age",
            "rdf_type",
            "foaf_livesIn"
        ]
    );

    assert_eq!(branch.edges.len(), 1);
    let edge = &branch.edges[0];
    assert_eq!(edge.subject_view, 1);
    assert_eq!(edge.column, "foaf_livesIn");
    assert_eq!(edge.object_view, 2);
    assert_eq!(edge.kind, JoinKind::Inner);

    assert_eq!(
        branch.bindings.get("firstName"),
        Some(&(1, "foaf_firstName".to_string()))
    );
    assert_eq!(
        branch.bindings.get("country"),
        Some(&(1, "foaf_livesIn".to_string()))
    );
    assert_eq!(
        branch.bindings.get("population"),
        Some(&(2, "foaf_population".to_string()))
    );

    // project over join; the type equality sits directly above R1
    let AstNode::Project { input, .. } = &branch.root else {
        panic!("root must project");
    };
    let AstNode::Join { kind, left, .. } = input.as_ref() else {
        panic!("expected a join under the projection");
    };
    assert_eq!(*kind, JoinKind::Inner);
    let AstNode::Select { condition, .. } = left.as_ref() else {
        panic!("expected the type selection above R1");
    };
    assert_eq!(condition.column, "rdf_type");
}

#[test]
fn product_offers_query_plans_five_views_and_four_joins() {
    let plan = plan(PRODUCT_OFFERS);
    let branch = &plan.branches[0];

    assert_eq!(branch.views.len(), 5);
    assert_eq!(plan.join_count(), 4);

    let kinds: Vec<(usize, usize, JoinKind)> = branch
        .edges
        .iter()
        .map(|e| (e.subject_view, e.object_view, e.kind))
        .collect();
    assert_eq!(
        kinds,
        [
            (2, 1, JoinKind::LeftOuter),
            (2, 3, JoinKind::Inner),
            (4, 1, JoinKind::LeftOuter),
            (4, 5, JoinKind::LeftOuter),
        ]
    );

    // the two optional patterns linking offer and vendor share one edge
    let vendor_edges: Vec<_> = branch.edges.iter().filter(|e| e.object_view == 3).collect();
    assert_eq!(vendor_edges.len(), 1);
    assert_eq!(vendor_edges[0].column, "vendor");

    // vendor country stays a pushed equality in optional scope
    let country = branch
        .selections
        .iter()
        .find(|s| s.column == "country")
        .expect("country selection");
    assert!(country.is_equality());
    assert_eq!(country.scope, Scope::Optional);
    assert_eq!(country.view, 3);

    // the key equality for the product constant is required scope
    let key = branch
        .selections
        .iter()
        .find(|s| s.is_key_equality())
        .expect("key selection");
    assert_eq!(key.view, 1);
    assert_eq!(key.scope, Scope::Required);

    // validTo comparison is hoisted above every join
    let AstNode::Project { input, .. } = &branch.root else {
        panic!("root must project");
    };
    let AstNode::Select { condition, .. } = input.as_ref() else {
        panic!("expected the hoisted validTo selection on top");
    };
    assert_eq!(condition.column, "validTo");
    assert!(!condition.is_equality());

    assert_well_formed(&plan.ast, false);
}

#[test]
fn mix_queries_plan_with_expected_join_counts() {
    for (name, text, joins) in MIX {
        let plan = plan(text);
        assert_eq!(
            plan.join_count(),
            *joins,
            "join count for {name} (expected {joins})"
        );
        assert_well_formed(&plan.ast, false);
        for branch in &plan.branches {
            assert_eq!(
                branch.edges.len(),
                branch.root.relation_count() - 1,
                "{name}: joins must be one fewer than relations"
            );
        }
    }
}

#[test]
fn describe_by_reviewer_projects_the_introduced_view() {
    let (_, text, _) = MIX.iter().find(|(n, _, _)| *n == "q09").unwrap();
    let plan = plan(text);
    let branch = &plan.branches[0];
    assert_eq!(branch.views.len(), 2);
    let AstNode::Project { projection, .. } = &branch.root else {
        panic!("root must project");
    };
    assert_eq!(*projection, Projection::AllColumns(2));
}

#[test]
fn union_query_dedups_sorts_and_limits() {
    let (_, text, _) = MIX.iter().find(|(n, _, _)| *n == "q04").unwrap();
    let plan = plan(text);
    assert_eq!(plan.branches.len(), 2);
    assert!(plan.distinct);
    assert_eq!(plan.limit, Some(10));

    let AstNode::Sort { keys, input } = &plan.ast else {
        panic!("ORDER BY must put a sort on top");
    };
    assert_eq!(keys.len(), 1);
    let AstNode::Dedup { input } = input.as_ref() else {
        panic!("DISTINCT must dedup below the sort");
    };
    assert!(matches!(input.as_ref(), AstNode::Union { .. }));

    // both branches project the same variables in the same order
    let first = plan.branches[0].views.last().unwrap().index;
    assert_eq!(plan.branches[1].views.first().unwrap().index, first + 1);
}

#[test]
fn explain_output_covers_subjects_views_edges_and_tree() {
    let plan = plan(PERSON_COUNTRY);
    let text = plan.explain();
    assert!(text.contains("subject R1 <- ?x (4 patterns)"));
    assert!(text.contains("subject R2 <- ?country (1 pattern)"));
    assert!(text.contains("view R1(key:str"));
    assert!(text.contains("join R1.foaf_livesIn = R2.key [inner]"));
    assert!(text.contains("project R1.foaf_firstName, R1.foaf_age, R2.foaf_population"));
    assert!(text.contains("relation R2"));
}

#[test]
fn unsupported_union_shapes_are_reported() {
    let query = parse_sparql(
        "PREFIX ex: <http://example.org/>\n\
         SELECT ?a WHERE {\n\
           OPTIONAL { { ?x ex:p ?a . } UNION { ?x ex:q ?a . } }\n\
           ?x ex:r ?a .\n\
         }",
    )
    .expect("query parses");
    let err = plan_query(&query, &PredicateTypeMap::new()).expect_err("planning fails");
    assert!(matches!(err, PlanError::UnsupportedShape(_)));
}
