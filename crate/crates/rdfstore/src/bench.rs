//! Timed query runs with both mean flavors.
//!
//! The geometric mean dampens outliers, so reports carry it next to the
//! arithmetic mean; for positive samples it can never exceed the arithmetic
//! one. A failing query is recorded and the run moves on.

use mapreduce_exec::{execute, ExecMetrics};
use query_planner::plan_query;
use serde::Serialize;
use sparql_frontend::parse_sparql;
use std::time::Instant;
use storage::PropertyTable;

pub fn arithmetic_mean(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().sum::<f64>() / samples.len() as f64
}

pub fn geometric_mean(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let log_sum: f64 = samples.iter().map(|s| s.ln()).sum();
    (log_sum / samples.len() as f64).exp()
}

#[derive(Debug, Serialize)]
pub struct BenchRow {
    pub query: String,
    pub runs_ms: Vec<f64>,
    pub arithmetic_ms: f64,
    pub geometric_ms: f64,
    pub rows: usize,
    pub error: Option<String>,
    pub metrics: Option<ExecMetrics>,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub repetitions: usize,
    pub queries: Vec<BenchRow>,
}

/// Run each named query `repetitions` times against the table.
pub fn bench(
    table: &PropertyTable,
    queries: &[(String, String)],
    repetitions: usize,
    parallelism: usize,
) -> BenchReport {
    let mut rows = Vec::with_capacity(queries.len());
    for (name, text) in queries {
        rows.push(bench_one(table, name, text, repetitions, parallelism));
    }
    BenchReport {
        repetitions,
        queries: rows,
    }
}

fn bench_one(
    table: &PropertyTable,
    name: &str,
    text: &str,
    repetitions: usize,
    parallelism: usize,
) -> BenchRow {
    let mut row = BenchRow {
        query: name.to_string(),
        runs_ms: Vec::new(),
        arithmetic_ms: 0.0,
        geometric_ms: 0.0,
        rows: 0,
        error: None,
        metrics: None,
    };
    let plan = match parse_sparql(text)
        .map_err(|e| e.to_string())
        .and_then(|query| plan_query(&query, table.type_map()).map_err(|e| e.to_string()))
    {
        Ok(plan) => plan,
        Err(e) => {
            row.error = Some(e);
            return row;
        }
    };
    for _ in 0..repetitions {
        let start = Instant::now();
        match execute(table, &plan, parallelism) {
            Ok((result, metrics)) => {
                row.runs_ms.push(start.elapsed().as_secs_f64() * 1e3);
                row.rows = result.len();
                row.metrics = Some(metrics);
            }
            Err(e) => {
                row.error = Some(e.to_string());
                break;
            }
        }
    }
    row.arithmetic_ms = arithmetic_mean(&row.runs_ms);
    row.geometric_ms = geometric_mean(&row.runs_ms);
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use bulk_loader::{load_dataset, LoadOptions};
    use tempfile::TempDir;

    #[test]
    fn equal_samples_have_equal_means() {
        assert_eq!(geometric_mean(&[1.0, 1.0, 1.0]), 1.0);
        assert_eq!(arithmetic_mean(&[1.0, 1.0, 1.0]), 1.0);
    }

    #[test]
    fn spread_samples_pull_the_geometric_mean_down() {
        assert!((geometric_mean(&[1.0, 4.0]) - 2.0).abs() < 1e-12);
        assert!((arithmetic_mean(&[1.0, 4.0]) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn report_records_runs_and_failures() {
        let nt = "<http://example.org/a> <http://example.org/name> \"Ann\" .\n";
        let dir = TempDir::new().unwrap();
        let options = LoadOptions {
            regions: 1,
            ..LoadOptions::default()
        };
        let (table, _) = load_dataset(nt, "ex http://example.org/\n", dir.path(), &options).unwrap();
        let queries = vec![
            (
                "names".to_string(),
                "PREFIX ex: <http://example.org/>\nSELECT ?n WHERE { ?s ex:name ?n }".to_string(),
            ),
            ("broken".to_string(), "SELECT nonsense".to_string()),
        ];
        let report = bench(&table, &queries, 3, 2);
        assert_eq!(report.queries.len(), 2);
        let ok = &report.queries[0];
        assert_eq!(ok.runs_ms.len(), 3);
        assert_eq!(ok.rows, 1);
        assert!(ok.error.is_none());
        assert!(ok.geometric_ms <= ok.arithmetic_ms + 1e-9);
        let broken = &report.queries[1];
        assert!(broken.error.is_some());
        assert!(broken.runs_ms.is_empty());
    }
}
