//! Command-line front end: load datasets, run queries, inspect plans, and
//! drive the statistics and benchmark jobs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use bulk_loader::{load_dataset, LoadOptions, SamplerConfig, DATASET_SIDECAR, PREFIX_SIDECAR};
use mapreduce_exec::{compile_physical, execute};
use query_planner::plan_query;
use rdf_model::PrefixTable;
use rdfstore::bench::bench;
use rdfstore::gen::{generate_synthetic, GenConfig, PREFIX_TEXT as GEN_PREFIXES};
use rdfstore::oracle::{oracle_eval, TripleTable};
use sparql_frontend::{parse_sparql, SparqlQuery};
use sql_generator::generate_sql;
use storage::PropertyTable;

#[derive(Parser)]
#[command(name = "rdfstore", about = "Embedded RDF store with a staged MapReduce query engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bulk-load an N-Triples file into a new table directory.
    Load {
        /// N-Triples input file.
        input: PathBuf,
        /// Prefix declarations, one "label uri" pair per line.
        #[arg(long)]
        prefixes: PathBuf,
        /// Directory to create the table in.
        #[arg(long)]
        out: PathBuf,
        /// Region count (power of two, 1..=16).
        #[arg(long, default_value_t = 4)]
        regions: usize,
        /// Seed for split-key sampling.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker count for the load jobs.
        #[arg(long, default_value_t = 4)]
        parallelism: usize,
    },
    /// Run a query and print one tab-separated line per result row.
    Query {
        /// Table directory.
        table: PathBuf,
        /// File holding the query text.
        #[arg(long)]
        sparql: PathBuf,
        /// Print the generated SQL before the results.
        #[arg(long)]
        emit_sql: bool,
        /// Print one JSON line of metrics per stage after the results.
        #[arg(long)]
        metrics: bool,
        /// Re-evaluate on the flat reference evaluator and fail on any difference.
        #[arg(long)]
        oracle_check: bool,
        #[arg(long, default_value_t = 4)]
        parallelism: usize,
    },
    /// Show the logical plan, or the physical stages with --physical.
    Explain {
        table: PathBuf,
        #[arg(long)]
        sparql: PathBuf,
        #[arg(long)]
        physical: bool,
    },
    /// Table statistics; --degree-histogram runs the counting jobs.
    Stats {
        table: PathBuf,
        /// Print "degree<TAB>subjects" lines computed via MapReduce.
        #[arg(long)]
        degree_histogram: bool,
    },
    /// Write a synthetic N-Triples corpus and its prefixes file.
    Gen {
        #[arg(long)]
        subjects: usize,
        #[arg(long)]
        predicates: usize,
        /// Fraction of the subject x predicate grid to fill, in (0, 1].
        #[arg(long)]
        density: f64,
        /// Probability that a filled cell holds two values.
        #[arg(long, default_value_t = 0.0)]
        multivalue: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; prefixes go next to it with extension "prefixes".
        #[arg(long)]
        out: PathBuf,
    },
    /// Time every .sparql file in a directory and print one JSON line each.
    Bench {
        table: PathBuf,
        /// Directory scanned for *.sparql files.
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 4)]
        parallelism: usize,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Load {
            input,
            prefixes,
            out,
            regions,
            seed,
            parallelism,
        } => load_cmd(&input, &prefixes, &out, regions, seed, parallelism),
        Command::Query {
            table,
            sparql,
            emit_sql,
            metrics,
            oracle_check,
            parallelism,
        } => query_cmd(&table, &sparql, emit_sql, metrics, oracle_check, parallelism),
        Command::Explain {
            table,
            sparql,
            physical,
        } => explain_cmd(&table, &sparql, physical),
        Command::Stats {
            table,
            degree_histogram,
        } => stats_cmd(&table, degree_histogram),
        Command::Gen {
            subjects,
            predicates,
            density,
            multivalue,
            seed,
            out,
        } => gen_cmd(subjects, predicates, density, multivalue, seed, &out),
        Command::Bench {
            table,
            queries,
            reps,
            parallelism,
        } => bench_cmd(&table, &queries, reps, parallelism),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_cmd(
    input: &Path,
    prefixes: &Path,
    out: &Path,
    regions: usize,
    seed: u64,
    parallelism: usize,
) -> Result<()> {
    let dataset = read(input)?;
    let prefix_text = read(prefixes)?;
    let options = LoadOptions {
        regions,
        parallelism,
        sampler: SamplerConfig {
            seed,
            ..SamplerConfig::default()
        },
        ..LoadOptions::default()
    };
    let (table, report) = load_dataset(&dataset, &prefix_text, out, &options)?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "loaded {} triples, {} subjects, {} regions, {} blocks",
        report.triples_loaded,
        report.subjects,
        table.region_count(),
        table.blocks().len()
    );
    Ok(())
}

fn parse_and_plan(
    table: &PropertyTable,
    sparql: &Path,
) -> Result<(SparqlQuery, query_planner::PlannedQuery)> {
    let text = read(sparql)?;
    let query = parse_sparql(&text).with_context(|| format!("parsing {}", sparql.display()))?;
    let plan = plan_query(&query, table.type_map()).context("planning query")?;
    Ok((query, plan))
}

fn query_cmd(
    table_dir: &Path,
    sparql: &Path,
    emit_sql: bool,
    metrics: bool,
    oracle_check: bool,
    parallelism: usize,
) -> Result<()> {
    let table = PropertyTable::open(table_dir)?;
    let (query, plan) = parse_and_plan(&table, sparql)?;
    if emit_sql {
        println!("{}", generate_sql(&plan, &query.prefixes).statement);
        println!();
    }
    let (rows, exec_metrics) = execute(&table, &plan, parallelism)?;
    for row in &rows {
        println!("{}", row.join("\t"));
    }
    if metrics {
        for stage in &exec_metrics.stages {
            println!("{}", serde_json::to_string(stage)?);
        }
    }
    if oracle_check {
        let dataset = read(&table_dir.join(DATASET_SIDECAR))?;
        let prefix_text = read(&table_dir.join(PREFIX_SIDECAR))?;
        let prefixes = PrefixTable::parse(&prefix_text)?;
        let flat = TripleTable::from_ntriples(&dataset, &prefixes)
            .map_err(|e| anyhow::anyhow!("oracle load: {e}"))?;
        let oracle = oracle_eval(&query, &flat).map_err(|e| anyhow::anyhow!("oracle: {e}"))?;
        check_agreement(&rows, &oracle.rows, &query)?;
        println!("oracle check: ok ({} rows)", rows.len());
    }
    Ok(())
}

fn check_agreement(
    engine: &[Vec<String>],
    oracle: &[Vec<String>],
    query: &SparqlQuery,
) -> Result<()> {
    let mut got = engine.to_vec();
    let mut want = oracle.to_vec();
    got.sort();
    want.sort();
    if got != want {
        bail!(
            "oracle check failed: engine returned {} row(s), oracle {} row(s), contents differ",
            engine.len(),
            oracle.len()
        );
    }
    if query.order_by.is_empty() {
        return Ok(());
    }
    let key_cols: Vec<usize> = query
        .order_by
        .iter()
        .filter_map(|(var, _)| query.projected.iter().position(|p| p == var))
        .collect();
    let keys = |rows: &[Vec<String>]| -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| key_cols.iter().map(|&i| r[i].clone()).collect())
            .collect()
    };
    if keys(engine) != keys(oracle) {
        bail!("oracle check failed: rows agree but the sort order differs");
    }
    Ok(())
}

fn explain_cmd(table_dir: &Path, sparql: &Path, physical: bool) -> Result<()> {
    let table = PropertyTable::open(table_dir)?;
    let (_, plan) = parse_and_plan(&table, sparql)?;
    if physical {
        print!("{}", compile_physical(&plan).explain());
    } else {
        print!("{}", plan.explain());
    }
    Ok(())
}

fn stats_cmd(table_dir: &Path, degree_histogram: bool) -> Result<()> {
    let table = PropertyTable::open(table_dir)?;
    if degree_histogram {
        for (degree, subjects) in rdfstore::stats::degree_histogram(&table, 4)? {
            println!("{degree}\t{subjects}");
        }
    } else {
        println!("entries\t{}", table.entry_count());
        println!("regions\t{}", table.region_count());
        println!("blocks\t{}", table.blocks().len());
    }
    Ok(())
}

fn gen_cmd(
    subjects: usize,
    predicates: usize,
    density: f64,
    multivalue: f64,
    seed: u64,
    out: &Path,
) -> Result<()> {
    if !(density > 0.0 && density <= 1.0) {
        bail!("density must lie in (0, 1], got {density}");
    }
    let config = GenConfig {
        subjects,
        predicates,
        density,
        multivalue_rate: multivalue,
        seed,
    };
    let (ntriples, plan) = generate_synthetic(&config);
    fs::write(out, &ntriples).with_context(|| format!("writing {}", out.display()))?;
    let prefix_path = out.with_extension("prefixes");
    fs::write(&prefix_path, GEN_PREFIXES)
        .with_context(|| format!("writing {}", prefix_path.display()))?;
    println!(
        "wrote {} triples over {} subjects (fill {:.4}) to {}",
        plan.triples,
        plan.degrees.len(),
        plan.fill,
        out.display()
    );
    Ok(())
}

fn bench_cmd(table_dir: &Path, queries: &Path, reps: usize, parallelism: usize) -> Result<()> {
    let table = PropertyTable::open(table_dir)?;
    let mut files: Vec<PathBuf> = fs::read_dir(queries)
        .with_context(|| format!("reading {}", queries.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "sparql"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .sparql files under {}", queries.display());
    }
    let mut named = Vec::new();
    for path in files {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        named.push((name, read(&path)?));
    }
    let report = bench(&table, &named, reps, parallelism);
    for row in &report.queries {
        println!("{}", serde_json::to_string(row)?);
    }
    Ok(())
}
