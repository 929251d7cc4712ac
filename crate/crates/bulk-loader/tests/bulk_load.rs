use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use bulk_loader::{
    load_dataset, LoadOptions, LoadReport, SamplerConfig, DATASET_SIDECAR, PREFIX_SIDECAR,
    REPORT_SIDECAR,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const PREFIXES: &str = "ex http://example.org/\nxsd http://www.w3.org/2001/XMLSchema#\n";

/// Deterministic corpus: `subjects` distinct subjects, a handful of string
/// and integer predicates, `triples` lines in total.
fn synthetic_dataset(subjects: usize, triples: usize, seed: u64) -> String {
    let mut rng = StdRng::seed_from_u64(seed);
    let names: Vec<String> = (0..subjects)
        .map(|i| format!("{:08x}", (i as u64).wrapping_mul(0x9e3779b97f4a7c15) >> 16))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut out = String::new();
    for i in 0..triples {
        let subject = &names[rng.gen_range(0..names.len())];
        match i % 3 {
            0 => out.push_str(&format!(
                "<http://example.org/{}> <http://example.org/name> \"n{}\" .\n",
                subject, i
            )),
            1 => out.push_str(&format!(
                "<http://example.org/{}> <http://example.org/size> \"{}\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n",
                subject,
                i % 97
            )),
            _ => out.push_str(&format!(
                "<http://example.org/{}> <http://example.org/link> <http://example.org/{}> .\n",
                subject,
                names[rng.gen_range(0..names.len())]
            )),
        }
    }
    out
}

fn block_files(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut files = Vec::new();
    for region in fs::read_dir(dir).unwrap() {
        let region = region.unwrap().path();
        if !region.is_dir() {
            continue;
        }
        for block in fs::read_dir(&region).unwrap() {
            let block = block.unwrap().path();
            if block.extension().is_some_and(|e| e == "blk") {
                files.push(block);
            }
        }
    }
    files.sort();
    files
}

#[test]
fn regions_keep_subjects_local_and_balanced() {
    let subjects = 1200;
    let dataset = synthetic_dataset(subjects, 9600, 11);
    let dir = tempfile::tempdir().unwrap();
    let options = LoadOptions {
        regions: 4,
        block_capacity: 512,
        ..LoadOptions::default()
    };
    let (table, report) = load_dataset(&dataset, PREFIXES, dir.path(), &options).unwrap();

    assert_eq!(report.triples_read, 9600);
    assert_eq!(report.triples_loaded, 9600);
    assert_eq!(table.entry_count(), 9600);
    assert_eq!(report.subjects as usize, subjects);
    assert_eq!(report.region_subjects.len(), 4);
    assert_eq!(report.region_subjects.iter().sum::<u64>(), report.subjects);

    // Every block stays inside its own region, so a subject never straddles.
    for (index, region) in table.regions().iter().enumerate() {
        for block in region.blocks() {
            assert_eq!(table.region_for_key(&block.first.row), index);
            assert_eq!(table.region_for_key(&block.last.row), index);
        }
    }

    let max = *report.region_subjects.iter().max().unwrap();
    let min = *report.region_subjects.iter().min().unwrap();
    assert!(
        max <= 2 * min,
        "subject counts too skewed: {:?}",
        report.region_subjects
    );
}

#[test]
fn identical_load_inputs_produce_identical_blocks() {
    let dataset = synthetic_dataset(300, 3000, 5);
    let options = LoadOptions {
        regions: 4,
        block_capacity: 256,
        parallelism: 1,
        sampler: SamplerConfig {
            seed: 42,
            ..SamplerConfig::default()
        },
    };

    let dir_a = tempfile::tempdir().unwrap();
    let (_, report_a) = load_dataset(&dataset, PREFIXES, dir_a.path(), &options).unwrap();

    let mut parallel = options.clone();
    parallel.parallelism = 8;
    let dir_b = tempfile::tempdir().unwrap();
    let (_, report_b) = load_dataset(&dataset, PREFIXES, dir_b.path(), &parallel).unwrap();

    assert_eq!(report_a.split_keys, report_b.split_keys);
    let blocks_a = block_files(dir_a.path());
    let blocks_b = block_files(dir_b.path());
    assert_eq!(blocks_a.len(), blocks_b.len());
    assert!(!blocks_a.is_empty());
    for (a, b) in blocks_a.iter().zip(&blocks_b) {
        assert_eq!(
            a.strip_prefix(dir_a.path()).unwrap(),
            b.strip_prefix(dir_b.path()).unwrap()
        );
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap(), "block {:?}", a);
    }
    assert_eq!(
        fs::read(dir_a.path().join("manifest.json")).unwrap(),
        fs::read(dir_b.path().join("manifest.json")).unwrap()
    );

    let mut other_seed = options;
    other_seed.sampler.seed = 43;
    let dir_c = tempfile::tempdir().unwrap();
    let (_, report_c) = load_dataset(&dataset, PREFIXES, dir_c.path(), &other_seed).unwrap();
    assert_ne!(report_a.split_keys, report_c.split_keys);
}

#[test]
fn later_lines_win_on_multi_valued_cells() {
    let dataset = "\
<http://example.org/s> <http://example.org/nick> \"first\" .
<http://example.org/t> <http://example.org/nick> \"other\" .
<http://example.org/s> <http://example.org/nick> \"second\" .
";
    let dir = tempfile::tempdir().unwrap();
    let options = LoadOptions {
        regions: 1,
        ..LoadOptions::default()
    };
    let (table, report) = load_dataset(dataset, PREFIXES, dir.path(), &options).unwrap();
    let (cells, _) = table.get_row("ex_s").unwrap();
    let values: Vec<String> = cells["ex_nick"].iter().map(|v| v.canonical()).collect();
    assert_eq!(values, vec!["second", "first"]);
    assert_eq!(report.triples_loaded, 3);
}

#[test]
fn sidecars_allow_reloading_the_raw_dataset() {
    let dataset = synthetic_dataset(40, 200, 3);
    let dir = tempfile::tempdir().unwrap();
    let options = LoadOptions {
        regions: 2,
        ..LoadOptions::default()
    };
    let (_, report) = load_dataset(&dataset, PREFIXES, dir.path(), &options).unwrap();

    assert_eq!(fs::read_to_string(dir.path().join(DATASET_SIDECAR)).unwrap(), dataset);
    assert_eq!(fs::read_to_string(dir.path().join(PREFIX_SIDECAR)).unwrap(), PREFIXES);
    let saved: LoadReport =
        serde_json::from_str(&fs::read_to_string(dir.path().join(REPORT_SIDECAR)).unwrap())
            .unwrap();
    assert_eq!(saved.triples_loaded, report.triples_loaded);
    assert_eq!(saved.split_keys, report.split_keys);
    assert_eq!(saved.stages.len(), 3);

    // The sealed table opens again from the manifest alone.
    let reopened = storage::PropertyTable::open(dir.path()).unwrap();
    assert_eq!(reopened.entry_count(), report.triples_loaded);
}
