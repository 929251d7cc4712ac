use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use rdf_model::{PredicateTypeMap, PrimType, PrimitiveValue};
use storage::{PropertyTable, StorageError};

fn s(v: &str) -> PrimitiveValue {
    PrimitiveValue::Str(v.to_string())
}

#[test]
fn sealed_tables_round_trip_through_open() {
    let dir = tempfile::tempdir().unwrap();
    let mut table =
        PropertyTable::create(dir.path(), vec!["m".to_string()], 4).unwrap();
    let mut ts = 0u64;
    for subject in ["alice", "bob", "nina", "zoe"] {
        for col in ["name", "age", "city"] {
            table
                .put(subject, col, ts, s(&format!("{}-{}", subject, col)))
                .unwrap();
            ts += 1;
        }
    }
    let mut type_map = PredicateTypeMap::new();
    type_map.observe("age", PrimType::Integer);
    table.set_type_map(type_map.clone());
    table.finish().unwrap();

    let reopened = PropertyTable::open(dir.path()).unwrap();
    assert_eq!(reopened.entry_count(), 12);
    assert_eq!(reopened.split_keys(), ["m".to_string()]);
    assert_eq!(reopened.type_map(), &type_map);

    let (cells, _) = reopened.get_row("nina").unwrap();
    assert_eq!(cells.len(), 3);
    assert_eq!(cells["city"], vec![s("nina-city")]);

    // Writes after sealing are refused, on both handles.
    let mut reopened = reopened;
    assert!(matches!(
        reopened.put("x", "y", 99, s("z")),
        Err(StorageError::ReadOnly(_))
    ));
}

#[test]
fn multi_valued_cells_come_back_newest_first() {
    let dir = tempfile::tempdir().unwrap();
    let mut table = PropertyTable::create(dir.path(), vec![], 2).unwrap();
    table.put("alice", "knows", 5, s("bob")).unwrap();
    table.put("alice", "knows", 9, s("carol")).unwrap();
    table.put("alice", "knows", 7, s("dave")).unwrap();
    table.finish().unwrap();

    let (cells, _) = table.get_row("alice").unwrap();
    assert_eq!(cells["knows"], vec![s("carol"), s("dave"), s("bob")]);
}

#[test]
fn scan_is_globally_sorted_and_range_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let mut table =
        PropertyTable::create(dir.path(), vec!["h".to_string(), "q".to_string()], 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut subjects: Vec<String> = (0..40).map(|i| format!("s{:02}", i)).collect();
    subjects.shuffle(&mut rng);
    for (ts, subject) in subjects.iter().enumerate() {
        table.put(subject, "p", ts as u64, s(subject)).unwrap();
    }
    table.finish().unwrap();

    let (all, _) = table.scan(None, None).unwrap();
    assert_eq!(all.len(), 40);
    assert!(all.windows(2).all(|w| w[0].0 <= w[1].0));

    let (slice, _) = table.scan(Some("s10"), Some("s20")).unwrap();
    assert_eq!(slice.len(), 10);
    assert!(slice.iter().all(|(k, _)| k.row >= "s10".to_string() && k.row < "s20".to_string()));
}

#[test]
fn every_subject_lands_in_exactly_one_region() {
    let dir = tempfile::tempdir().unwrap();
    let splits = vec!["g".to_string(), "n".to_string(), "t".to_string()];
    let mut table = PropertyTable::create(dir.path(), splits, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for i in 0..300 {
        let subject = format!("{}{:03}", (b'a' + rng.gen_range(0..26)) as char, i);
        for col in ["p1", "p2"] {
            table.put(&subject, col, i as u64, s("v")).unwrap();
        }
    }
    table.finish().unwrap();

    for id in table.blocks() {
        let region = id.region;
        for (key, _) in table.read_block(id).unwrap() {
            assert_eq!(
                table.region_for_key(&key.row),
                region,
                "row {} stored outside its region",
                key.row
            );
        }
    }
}

#[test]
fn column_restricted_gets_skip_blocks_via_bloom() {
    let dir = tempfile::tempdir().unwrap();
    // Tiny capacity: ten subjects with five columns each make many blocks.
    let mut table = PropertyTable::create(dir.path(), vec![], 10).unwrap();
    let subjects = [
        "albert", "bertha", "carlos", "denise", "edward", "farida", "george", "hannah", "island",
        "joseph",
    ];
    let mut ts = 0;
    for round in 0..2 {
        for subject in subjects {
            for c in 0..5 {
                table
                    .put(subject, &format!("col{}", c), ts, s(&format!("{}", round)))
                    .unwrap();
                ts += 1;
            }
        }
    }
    table.finish().unwrap();
    let total_blocks = table.blocks().len() as u64;
    assert!(total_blocks >= 8, "expected many small blocks");

    let cols: BTreeSet<String> = ["col3".to_string()].into();
    let (cells, stats) = table.get_cells("albert", Some(&cols)).unwrap();
    assert_eq!(cells.len(), 1);
    assert_eq!(cells["col3"].len(), 2);
    assert_eq!(stats.read + stats.skipped, total_blocks);

    // Find the blocks that genuinely hold the row, then allow only bloom
    // false positives beyond that.
    let mut truly_containing = 0u64;
    let mut false_positives = 0u64;
    for id in table.blocks() {
        let meta = table.block_meta(id).unwrap();
        if !meta.covers_row("albert") || !table.bloom_check(id, "albert", "col3").unwrap() {
            continue;
        }
        let holds = table
            .read_block(id)
            .unwrap()
            .iter()
            .any(|(k, _)| k.row == "albert" && k.col == "col3");
        if holds {
            truly_containing += 1;
        } else {
            false_positives += 1;
        }
    }
    assert_eq!(stats.read, truly_containing + false_positives);
    assert!(truly_containing <= 2, "row unexpectedly spread out");
}
