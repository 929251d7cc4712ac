use std::fs;
use std::path::Path;
use std::time::Instant;

use mapreduce_exec::{run_job, MrJob, StageMetrics};
use rdf_model::{infer_primitive, PredicateTypeMap, PrefixTable, PrimitiveValue, Term};
use serde::{Deserialize, Serialize};
use storage::{CellKey, PropertyTable};

use crate::sampler::{sample_split_keys, SamplerConfig};
use crate::split::{make_input_splits, tagged_record, SPLIT_TARGET_BYTES};
use crate::LoadError;

/// Reserved shuffle key for datatype warnings. Control characters cannot
/// appear in subject keys, so it never collides with real rows.
const WARNING_KEY: &str = "\u{1}warning";

/// Copy of the raw dataset written next to the table.
pub const DATASET_SIDECAR: &str = "dataset.nt";
/// Copy of the prefix declarations written next to the table.
pub const PREFIX_SIDECAR: &str = "prefixes.txt";
/// Load report written next to the table.
pub const REPORT_SIDECAR: &str = "load_report.json";

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub regions: usize,
    pub block_capacity: usize,
    pub parallelism: usize,
    pub sampler: SamplerConfig,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            regions: 4,
            block_capacity: storage::DEFAULT_BLOCK_CAPACITY,
            parallelism: 4,
            sampler: SamplerConfig::default(),
        }
    }
}

/// Timing and record counts for one load stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadStage {
    pub name: String,
    pub millis: u64,
    pub records_in: u64,
    pub records_shuffled: u64,
    pub records_out: u64,
}

impl LoadStage {
    fn from_metrics(metrics: &StageMetrics, millis: u64) -> Self {
        LoadStage {
            name: metrics.stage.clone(),
            millis,
            records_in: metrics.records_in,
            records_shuffled: metrics.records_shuffled,
            records_out: metrics.records_out,
        }
    }
}

/// Summary of one bulk load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadReport {
    pub triples_read: u64,
    pub triples_loaded: u64,
    pub subjects: u64,
    pub region_subjects: Vec<u64>,
    pub split_keys: Vec<String>,
    pub warnings: Vec<String>,
    pub stages: Vec<LoadStage>,
}

/// What the transform pass produced, before the manifest is written.
#[derive(Debug)]
pub struct TransformStats {
    pub triples: u64,
    pub subjects: u64,
    pub region_subjects: Vec<u64>,
    pub warnings: Vec<String>,
    pub metrics: StageMetrics,
}

#[derive(Serialize, Deserialize)]
struct PutWire {
    c: String,
    t: u64,
    v: String,
}

fn put_wire(col: &str, ts: u64, value: &PrimitiveValue) -> String {
    serde_json::to_string(&PutWire {
        c: col.to_string(),
        t: ts,
        v: value.encode(),
    })
    .expect("put record serializes")
}

/// First load pass: map tasks parse each line and emit its compacted subject
/// key, a reduce pass collapses duplicates. Returns the sorted unique subject
/// keys. Parse failures abort the job and name the offending line.
pub fn extract_unique_subjects(
    dataset: &str,
    prefixes: &PrefixTable,
    parallelism: usize,
) -> Result<(Vec<String>, StageMetrics), LoadError> {
    extract_unique_subjects_with(dataset, prefixes, parallelism, SPLIT_TARGET_BYTES)
}

fn extract_unique_subjects_with(
    dataset: &str,
    prefixes: &PrefixTable,
    parallelism: usize,
    target_bytes: usize,
) -> Result<(Vec<String>, StageMetrics), LoadError> {
    let splits = make_input_splits(dataset, target_bytes);
    let job = MrJob::new(
        "extract-subjects",
        parallelism.max(1),
        Box::new(move |record| {
            let (line, text) = tagged_record(record);
            match rdf_model::parse_ntriples_line(text) {
                Ok(Some(triple)) => {
                    let mut subject = triple.subject;
                    prefixes.compress(&mut subject);
                    Ok(vec![(subject.compact, String::new())])
                }
                Ok(None) => Ok(Vec::new()),
                Err(mut e) => {
                    e.line = line;
                    Err(e.to_string())
                }
            }
        }),
    )
    .with_reduce(Box::new(|key, _values| {
        Ok(vec![(key.to_string(), String::new())])
    }));
    let (pairs, metrics) = run_job(&job, &splits, parallelism)?;
    let mut subjects: Vec<String> = pairs.into_iter().map(|(k, _)| k).collect();
    subjects.sort_unstable();
    Ok((subjects, metrics))
}

/// Second load pass: map tasks turn each triple into a property-table cell
/// keyed by subject, the partitioner routes every subject to its region, and
/// the sorted reducer streams become the installed block files. Cell
/// timestamps are input line numbers, so on multi-valued cells later lines
/// read back first.
pub fn transform_and_load(
    dataset: &str,
    prefixes: &PrefixTable,
    table: &mut PropertyTable,
    parallelism: usize,
) -> Result<TransformStats, LoadError> {
    transform_and_load_with(dataset, prefixes, table, parallelism, SPLIT_TARGET_BYTES)
}

fn transform_and_load_with(
    dataset: &str,
    prefixes: &PrefixTable,
    table: &mut PropertyTable,
    parallelism: usize,
    target_bytes: usize,
) -> Result<TransformStats, LoadError> {
    let splits = make_input_splits(dataset, target_bytes);
    let regions = table.region_count();
    let split_keys = table.split_keys().to_vec();
    let job = MrJob::new(
        "transform-triples",
        regions,
        Box::new(move |record| {
            let (line, text) = tagged_record(record);
            match rdf_model::parse_ntriples_line(text) {
                Ok(Some(mut triple)) => {
                    prefixes.compress(&mut triple.subject);
                    prefixes.compress(&mut triple.predicate);
                    let mut out = Vec::with_capacity(1);
                    let value = match &mut triple.object {
                        Term::Uri(u) => {
                            prefixes.compress(u);
                            PrimitiveValue::Str(u.compact.clone())
                        }
                        Term::Literal(lit) => {
                            let (value, _, warning) = infer_primitive(lit);
                            if let Some(w) = warning {
                                out.push((
                                    WARNING_KEY.to_string(),
                                    format!("line {}: {}", line, w),
                                ));
                            }
                            value
                        }
                        other => {
                            return Err(format!("line {}: unexpected object term {}", line, other))
                        }
                    };
                    out.push((
                        triple.subject.compact,
                        put_wire(&triple.predicate.compact, line as u64, &value),
                    ));
                    Ok(out)
                }
                Ok(None) => Ok(Vec::new()),
                Err(mut e) => {
                    e.line = line;
                    Err(e.to_string())
                }
            }
        }),
    )
    .with_partition(Box::new(move |key, reducers| {
        if key == WARNING_KEY {
            return 0;
        }
        split_keys
            .partition_point(|s| s.as_str() <= key)
            .min(reducers - 1)
    }));

    let (pairs, metrics) = run_job(&job, &splits, parallelism)?;

    let mut warnings = Vec::new();
    let mut region_entries: Vec<Vec<(CellKey, PrimitiveValue)>> = vec![Vec::new(); regions];
    let mut region_subjects = vec![0u64; regions];
    let mut type_map = PredicateTypeMap::new();
    let mut subjects = 0u64;
    let mut triples = 0u64;
    let mut prev_subject = String::new();
    for (key, value) in &pairs {
        if key == WARNING_KEY {
            warnings.push(value.clone());
            continue;
        }
        let wire: PutWire = serde_json::from_str(value).expect("put record round-trips");
        let cell = PrimitiveValue::decode(&wire.v).expect("cell value round-trips");
        let region = table.region_for_key(key);
        if prev_subject != *key {
            subjects += 1;
            region_subjects[region] += 1;
            prev_subject = key.clone();
        }
        if type_map.observe(&wire.c, cell.prim_type()) {
            warnings.push(format!(
                "column {} holds mixed literal types, comparisons fall back to strings",
                wire.c
            ));
        }
        triples += 1;
        region_entries[region].push((CellKey::new(key.clone(), wire.c, wire.t), cell));
    }
    install_blocks(table, region_entries)?;
    table.set_type_map(type_map);
    Ok(TransformStats {
        triples,
        subjects,
        region_subjects,
        warnings,
        metrics,
    })
}

/// Attach per-region cell runs to the table as capacity-sized sorted blocks.
/// A run containing a row outside its region is rejected.
pub fn install_blocks(
    table: &mut PropertyTable,
    region_entries: Vec<Vec<(CellKey, PrimitiveValue)>>,
) -> Result<(), LoadError> {
    for (region, mut entries) in region_entries.into_iter().enumerate() {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for chunk in entries.chunks(table.block_capacity()) {
            table.install_block(region, chunk)?;
        }
    }
    Ok(())
}

fn elapsed_ms(started: Instant) -> u64 {
    started.elapsed().as_millis() as u64
}

fn write_sidecar(dir: &Path, name: &str, contents: &str) -> Result<(), LoadError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| LoadError::Io { path, source })
}

/// Run the full bulk load pipeline: extract unique subjects, sample region
/// boundaries from them, create the table, transform every triple into its
/// region's blocks, and seal the manifest. The dataset and prefix texts are
/// copied next to the table so tools can re-derive the raw triples later.
pub fn load_dataset(
    dataset: &str,
    prefix_text: &str,
    dir: &Path,
    options: &LoadOptions,
) -> Result<(PropertyTable, LoadReport), LoadError> {
    let prefixes = PrefixTable::parse(prefix_text)?;
    let mut stages = Vec::new();

    let started = Instant::now();
    let (subjects, metrics) = extract_unique_subjects(dataset, &prefixes, options.parallelism)?;
    stages.push(LoadStage::from_metrics(&metrics, elapsed_ms(started)));

    let started = Instant::now();
    let split_keys = sample_split_keys(&subjects, options.regions, &options.sampler)?;
    stages.push(LoadStage {
        name: "sample-splits".to_string(),
        millis: elapsed_ms(started),
        records_in: subjects.len() as u64,
        records_shuffled: 0,
        records_out: split_keys.len() as u64,
    });

    let started = Instant::now();
    let mut table = PropertyTable::create(dir, split_keys.clone(), options.block_capacity)?;
    let stats = transform_and_load(dataset, &prefixes, &mut table, options.parallelism)?;
    stages.push(LoadStage::from_metrics(&stats.metrics, elapsed_ms(started)));
    table.finish()?;

    let report = LoadReport {
        triples_read: stats.triples,
        triples_loaded: table.entry_count(),
        subjects: stats.subjects,
        region_subjects: stats.region_subjects,
        split_keys,
        warnings: stats.warnings,
        stages,
    };
    write_sidecar(dir, DATASET_SIDECAR, dataset)?;
    write_sidecar(dir, PREFIX_SIDECAR, prefix_text)?;
    let report_json =
        serde_json::to_string_pretty(&report).expect("load report serializes");
    write_sidecar(dir, REPORT_SIDECAR, &report_json)?;
    Ok((table, report))
}
