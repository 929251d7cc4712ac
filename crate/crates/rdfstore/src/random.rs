//! Randomized dataset and query pairs for equivalence testing.
//!
//! Datasets hold a single value per (subject, predicate) pair, and queries
//! stay inside the shapes every evaluator defines identically: subjects are
//! variables, every object variable is fresh, views connect through link
//! predicates only, and equality filters on optionally-bound variables sit
//! inside their OPTIONAL group. Within that envelope the generator draws
//! joins, optionals, filters, unions, DISTINCT, ORDER BY and LIMIT freely.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const NAMESPACE: &str = "http://example.org/rnd/";
pub const PREFIX_TEXT: &str = "rnd http://example.org/rnd/\n";
const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";

const WORDS: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "theta", "kappa", "lambda", "sigma",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredKind {
    Link,
    Int,
    Text,
}

#[derive(Debug)]
pub struct PredSpec {
    pub index: usize,
    pub kind: PredKind,
    /// Values that occur in the data, rendered as query-text constants.
    pub seen: Vec<String>,
}

#[derive(Debug)]
pub struct RandomDataset {
    pub ntriples: String,
    pub prefixes: String,
    pub subjects: usize,
    pub triples: usize,
    pub predicates: Vec<PredSpec>,
}

fn subject_uri(index: usize) -> String {
    format!("{NAMESPACE}s{index}")
}

fn pred_kind(index: usize) -> PredKind {
    match index % 4 {
        0 => PredKind::Link,
        2 => PredKind::Text,
        _ => PredKind::Int,
    }
}

/// A dataset of at most 1000 triples over at most 15 predicates.
pub fn random_dataset(seed: u64) -> RandomDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subjects = rng.gen_range(8..=40);
    let predicate_count = rng.gen_range(4..=12);
    let density: f64 = rng.gen_range(0.25..0.85);

    let grid = subjects * predicate_count;
    let filled = ((density * grid as f64).round() as usize).clamp(1, grid);
    let mut cells = rand::seq::index::sample(&mut rng, grid, filled).into_vec();
    cells.sort_unstable();

    let mut predicates: Vec<PredSpec> = (0..predicate_count)
        .map(|index| PredSpec {
            index,
            kind: pred_kind(index),
            seen: Vec::new(),
        })
        .collect();

    let mut ntriples = String::new();
    for cell in cells {
        let subject = cell / predicate_count;
        let predicate = cell % predicate_count;
        let (object, constant) = match pred_kind(predicate) {
            PredKind::Link => {
                let target = rng.gen_range(0..subjects);
                (format!("<{}>", subject_uri(target)), format!("rnd:s{target}"))
            }
            PredKind::Int => {
                let n: u32 = rng.gen_range(0..=60);
                (format!("\"{n}\"^^<{XSD_INTEGER}>"), n.to_string())
            }
            PredKind::Text => {
                let word = WORDS[rng.gen_range(0..WORDS.len())];
                let text = if rng.gen_bool(0.3) {
                    let mut chars = word.chars();
                    let first = chars.next().unwrap().to_uppercase().to_string();
                    format!("{first}{}", chars.as_str())
                } else {
                    word.to_string()
                };
                (format!("\"{text}\""), format!("\"{text}\""))
            }
        };
        ntriples.push_str(&format!(
            "<{}> <{}p{predicate}> {object} .\n",
            subject_uri(subject),
            NAMESPACE
        ));
        let spec = &mut predicates[predicate];
        if !spec.seen.contains(&constant) {
            spec.seen.push(constant);
        }
    }

    RandomDataset {
        ntriples,
        prefixes: PREFIX_TEXT.to_string(),
        subjects,
        triples: filled,
        predicates,
    }
}

struct QueryDraft {
    /// (subject var, predicate index, object text or None for a fresh var).
    patterns: Vec<(String, usize, Option<String>)>,
    optional: Vec<(String, usize, Option<String>)>,
    optional_filters: Vec<String>,
    filters: Vec<String>,
    union: Option<(String, String)>,
    /// var -> the predicate that binds it (None for subject variables).
    vars: Vec<(String, Option<usize>)>,
}

/// A SELECT query over the dataset, at most four patterns.
pub fn random_query(seed: u64, ds: &RandomDataset) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1));
    let mut draft = QueryDraft {
        patterns: Vec::new(),
        optional: Vec::new(),
        optional_filters: Vec::new(),
        filters: Vec::new(),
        union: None,
        vars: vec![("s0".to_string(), None)],
    };
    let mut next_var = 0usize;
    let fresh = |prefix: &str, next: &mut usize| {
        *next += 1;
        format!("{prefix}{next}")
    };

    let links: Vec<usize> = ds
        .predicates
        .iter()
        .filter(|p| p.kind == PredKind::Link)
        .map(|p| p.index)
        .collect();
    let mut plain: Vec<usize> = ds
        .predicates
        .iter()
        .filter(|p| p.kind != PredKind::Link)
        .map(|p| p.index)
        .collect();
    plain.shuffle(&mut rng);
    let mut spare_links = links.clone();
    spare_links.shuffle(&mut rng);

    // Base patterns on ?s0.
    let base = rng.gen_range(1..=2.min(plain.len()));
    for _ in 0..base {
        let pred = plain.pop().expect("plain predicates remain");
        let object = if rng.gen_bool(0.25) {
            draw_constant(&mut rng, &ds.predicates[pred])
        } else {
            let var = fresh("v", &mut next_var);
            draft.vars.push((var.clone(), Some(pred)));
            format!("?{var}")
        };
        draft.patterns.push(("s0".to_string(), pred, Some(object)));
    }

    let mut budget = 4usize.saturating_sub(draft.patterns.len());

    // Either grow a join through a link predicate or add a UNION, not both;
    // an OPTIONAL can ride on top of the join.
    let grow_join = budget >= 2 && !spare_links.is_empty() && !plain.is_empty() && rng.gen_bool(0.5);
    if grow_join {
        let link = spare_links.pop().unwrap();
        draft.patterns.push(("s0".to_string(), link, Some("?s1".to_string())));
        draft.vars.push(("s1".to_string(), Some(link)));
        let pred = plain.pop().unwrap();
        let var = fresh("v", &mut next_var);
        draft.patterns.push(("s1".to_string(), pred, Some(format!("?{var}"))));
        draft.vars.push((var, Some(pred)));
        budget = budget.saturating_sub(2);
    } else if budget >= 1 && plain.len() >= 2 && rng.gen_bool(0.35) {
        let pred_a = plain.pop().unwrap();
        let pred_b = plain.pop().unwrap();
        if rng.gen_bool(0.5) {
            // Both branches bind the same variable through different columns.
            draft.vars.push(("u".to_string(), Some(pred_a)));
            draft.union = Some((
                format!("?s0 rnd:p{pred_a} ?u ."),
                format!("?s0 rnd:p{pred_b} ?u ."),
            ));
        } else {
            draft.union = Some((
                format!(
                    "?s0 rnd:p{pred_a} {} .",
                    draw_constant(&mut rng, &ds.predicates[pred_a])
                ),
                format!(
                    "?s0 rnd:p{pred_b} {} .",
                    draw_constant(&mut rng, &ds.predicates[pred_b])
                ),
            ));
        }
        budget = budget.saturating_sub(1);
    }

    // OPTIONAL: a fresh column on ?s0, or a fresh column behind a link.
    if budget >= 1 && draft.union.is_none() && rng.gen_bool(0.55) {
        let behind_link = budget >= 2 && !spare_links.is_empty() && !plain.is_empty()
            && rng.gen_bool(0.35);
        if behind_link {
            let link = spare_links.pop().unwrap();
            draft.patterns.push(("s0".to_string(), link, Some("?b".to_string())));
            draft.vars.push(("b".to_string(), Some(link)));
            let pred = plain.pop().unwrap_or(0);
            let var = fresh("o", &mut next_var);
            draft.optional.push(("b".to_string(), pred, Some(format!("?{var}"))));
            draft.vars.push((var.clone(), Some(pred)));
            maybe_optional_filter(&mut rng, &mut draft, &var, pred, ds);
        } else if let Some(pred) = plain.pop() {
            if rng.gen_bool(0.15) {
                // A constant object inside OPTIONAL acts as a conditional.
                draft.optional.push((
                    "s0".to_string(),
                    pred,
                    Some(draw_constant(&mut rng, &ds.predicates[pred])),
                ));
            } else {
                let var = fresh("o", &mut next_var);
                draft.optional.push(("s0".to_string(), pred, Some(format!("?{var}"))));
                draft.vars.push((var.clone(), Some(pred)));
                maybe_optional_filter(&mut rng, &mut draft, &var, pred, ds);
            }
        }
    }

    // Top-level filters on required-bound variables; optional variables only
    // get the gap-tolerant kinds here.
    let optional_vars: Vec<String> = draft
        .optional
        .iter()
        .filter_map(|(_, _, obj)| obj.as_ref())
        .filter(|o| o.starts_with('?'))
        .map(|o| o[1..].to_string())
        .collect();
    let filter_candidates: Vec<(String, Option<usize>)> = draft
        .vars
        .iter()
        .filter(|(name, _)| name != "u")
        .cloned()
        .collect();
    for _ in 0..2 {
        if draft.filters.len() < 2 && !filter_candidates.is_empty() && rng.gen_bool(0.45) {
            let (var, pred) = filter_candidates[rng.gen_range(0..filter_candidates.len())].clone();
            let optional_bound = optional_vars.contains(&var);
            if let Some(filter) = draw_filter(&mut rng, &var, pred, ds, optional_bound) {
                draft.filters.push(filter);
            }
        }
    }

    // Projection: conceal nothing the tail needs; under UNION only variables
    // bound in every branch qualify.
    let mut pool: Vec<String> = draft
        .vars
        .iter()
        .map(|(name, _)| name.clone())
        .filter(|name| {
            if draft.union.is_some() {
                name == "s0" || name == "u" || draft.patterns.iter().any(|(_, _, o)| {
                    o.as_deref() == Some(&format!("?{name}")[..])
                })
            } else {
                true
            }
        })
        .collect();
    pool.dedup();
    let projected_count = rng.gen_range(1..=pool.len().min(3));
    let mut projected = pool.clone();
    projected.shuffle(&mut rng);
    projected.truncate(projected_count);

    let distinct = rng.gen_bool(0.3);
    let order_by: Vec<(String, bool)> = if rng.gen_bool(0.45) {
        let mut keys = projected.clone();
        keys.shuffle(&mut rng);
        keys.truncate(rng.gen_range(1..=keys.len().min(2)));
        keys.into_iter().map(|k| (k, rng.gen_bool(0.5))).collect()
    } else {
        Vec::new()
    };
    let limit = if !order_by.is_empty() && rng.gen_bool(0.5) {
        Some(rng.gen_range(1..=15u32))
    } else {
        None
    };

    render_query(&draft, &projected, distinct, &order_by, limit)
}

fn draw_constant(rng: &mut ChaCha8Rng, spec: &PredSpec) -> String {
    if !spec.seen.is_empty() && rng.gen_bool(0.8) {
        spec.seen[rng.gen_range(0..spec.seen.len())].clone()
    } else {
        match spec.kind {
            PredKind::Link => "rnd:s0".to_string(),
            PredKind::Int => rng.gen_range(0..=60u32).to_string(),
            PredKind::Text => format!("\"{}\"", WORDS[rng.gen_range(0..WORDS.len())]),
        }
    }
}

fn maybe_optional_filter(
    rng: &mut ChaCha8Rng,
    draft: &mut QueryDraft,
    var: &str,
    pred: usize,
    ds: &RandomDataset,
) {
    if !rng.gen_bool(0.45) {
        return;
    }
    if let Some(filter) = draw_filter(rng, var, Some(pred), ds, false) {
        draft.optional_filters.push(filter);
    }
}

/// One FILTER line. Equality on an optionally-bound variable is never drawn
/// at the top level; callers inside the OPTIONAL pass `optional_bound:
/// false` because scope makes it legal again there.
fn draw_filter(
    rng: &mut ChaCha8Rng,
    var: &str,
    pred: Option<usize>,
    ds: &RandomDataset,
    optional_bound: bool,
) -> Option<String> {
    let Some(pred) = pred else {
        // Subject variable: compare against a subject constant.
        if optional_bound || !rng.gen_bool(0.4) {
            return None;
        }
        return Some(format!("FILTER (?{var} = rnd:s{})", rng.gen_range(0..ds.subjects)));
    };
    let spec = &ds.predicates[pred];
    match spec.kind {
        PredKind::Int => {
            let ops = if optional_bound {
                &["!=", "<", ">", "<=", ">="][..]
            } else {
                &["=", "!=", "<", ">", "<=", ">="][..]
            };
            let op = ops[rng.gen_range(0..ops.len())];
            let value = if !spec.seen.is_empty() && rng.gen_bool(0.6) {
                spec.seen[rng.gen_range(0..spec.seen.len())].clone()
            } else {
                rng.gen_range(0..=60u32).to_string()
            };
            Some(format!("FILTER (?{var} {op} {value})"))
        }
        PredKind::Text => {
            let word = draw_constant(rng, spec);
            match rng.gen_range(0..3u8) {
                0 => {
                    let stem: String = word
                        .trim_matches('"')
                        .chars()
                        .take(2)
                        .map(|c| c.to_ascii_lowercase())
                        .collect();
                    let flags = if rng.gen_bool(0.5) { ", \"i\"" } else { "" };
                    let anchor = if rng.gen_bool(0.5) { "^" } else { "" };
                    Some(format!("FILTER regex(?{var}, \"{anchor}{stem}\"{flags})"))
                }
                1 if !optional_bound => Some(format!("FILTER (?{var} = {word})")),
                _ => {
                    if optional_bound && rng.gen_bool(0.5) {
                        Some(format!("FILTER (bound(?{var}))"))
                    } else {
                        Some(format!("FILTER (?{var} != {word})"))
                    }
                }
            }
        }
        PredKind::Link => {
            if optional_bound {
                Some(format!("FILTER (bound(?{var}))"))
            } else if rng.gen_bool(0.5) {
                Some(format!("FILTER (?{var} = {})", draw_constant(rng, spec)))
            } else {
                None
            }
        }
    }
}

fn render_query(
    draft: &QueryDraft,
    projected: &[String],
    distinct: bool,
    order_by: &[(String, bool)],
    limit: Option<u32>,
) -> String {
    let mut text = String::from("PREFIX rnd: <http://example.org/rnd/>\n");
    text.push_str("SELECT ");
    if distinct {
        text.push_str("DISTINCT ");
    }
    for (i, var) in projected.iter().enumerate() {
        if i > 0 {
            text.push(' ');
        }
        text.push('?');
        text.push_str(var);
    }
    text.push_str("\nWHERE {\n");
    for (subject, pred, object) in &draft.patterns {
        let object = object.clone().unwrap_or_else(|| "?unused".to_string());
        text.push_str(&format!("?{subject} rnd:p{pred} {object} .\n"));
    }
    for filter in &draft.filters {
        text.push_str(filter);
        text.push('\n');
    }
    if !draft.optional.is_empty() {
        text.push_str("OPTIONAL {\n");
        for (subject, pred, object) in &draft.optional {
            let object = object.clone().unwrap_or_else(|| "?unused".to_string());
            text.push_str(&format!("?{subject} rnd:p{pred} {object} .\n"));
        }
        for filter in &draft.optional_filters {
            text.push_str(filter);
            text.push('\n');
        }
        text.push_str("}\n");
    }
    if let Some((left, right)) = &draft.union {
        text.push_str(&format!("{{ {left} }} UNION {{ {right} }}\n"));
    }
    text.push_str("}\n");
    if !order_by.is_empty() {
        text.push_str("ORDER BY");
        for (var, desc) in order_by {
            if *desc {
                text.push_str(&format!(" DESC(?{var})"));
            } else {
                text.push_str(&format!(" ?{var}"));
            }
        }
        text.push('\n');
    }
    if let Some(limit) = limit {
        text.push_str(&format!("LIMIT {limit}\n"));
    }
    text
}
