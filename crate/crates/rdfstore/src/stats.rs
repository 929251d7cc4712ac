//! Dataset analytics run as MapReduce jobs.

use std::collections::BTreeMap;

use mapreduce_exec::{run_job, ExecError, MrJob};
use storage::PropertyTable;

/// How many objects sit next to each subject: degree -> subject count.
///
/// Two chained jobs: the first counts cells per subject, the second counts
/// subjects per degree.
pub fn degree_histogram(
    table: &PropertyTable,
    parallelism: usize,
) -> Result<BTreeMap<u64, u64>, ExecError> {
    let (cells, _) = table
        .scan(None, None)
        .map_err(|e| ExecError::Plan(e.to_string()))?;
    let mut splits: Vec<Vec<String>> = vec![Vec::new(); table.region_count()];
    for (key, _) in cells {
        splits[table.region_for_key(&key.row)].push(key.row);
    }

    let count_job = MrJob::new(
        "degree-count",
        table.region_count().max(1),
        Box::new(|record| Ok(vec![(record.to_string(), "1".to_string())])),
    )
    .with_reduce(Box::new(|key, values| {
        Ok(vec![(key.to_string(), values.len().to_string())])
    }));
    let (degrees, _) = run_job(&count_job, &splits, parallelism)?;

    let degree_records: Vec<String> = degrees.into_iter().map(|(_, count)| count).collect();
    let histogram_job = MrJob::new(
        "degree-frequency",
        4,
        Box::new(|record| Ok(vec![(record.to_string(), "1".to_string())])),
    )
    .with_reduce(Box::new(|key, values| {
        Ok(vec![(key.to_string(), values.len().to_string())])
    }));
    let (frequencies, _) = run_job(&histogram_job, &[degree_records], parallelism)?;

    let mut out = BTreeMap::new();
    for (degree, count) in frequencies {
        let degree: u64 = degree.parse().map_err(|_| {
            ExecError::Plan(format!("degree {degree:?} is not a number"))
        })?;
        let count: u64 = count
            .parse()
            .map_err(|_| ExecError::Plan(format!("count {count:?} is not a number")))?;
        out.insert(degree, count);
    }
    Ok(out)
}

/// Classic word count: one split per document, one record per line, words
/// separated by whitespace.
pub fn word_count(
    documents: &[String],
    parallelism: usize,
) -> Result<BTreeMap<String, u64>, ExecError> {
    let splits: Vec<Vec<String>> = documents
        .iter()
        .map(|doc| doc.lines().map(str::to_string).collect())
        .collect();
    let job = MrJob::new(
        "word-count",
        4,
        Box::new(|line| {
            Ok(line
                .split_whitespace()
                .map(|w| (w.to_string(), "1".to_string()))
                .collect())
        }),
    )
    .with_reduce(Box::new(|key, values| {
        Ok(vec![(key.to_string(), values.len().to_string())])
    }));
    let (pairs, _) = run_job(&job, &splits, parallelism)?;
    let mut out = BTreeMap::new();
    for (word, count) in pairs {
        let count: u64 = count
            .parse()
            .map_err(|_| ExecError::Plan(format!("count {count:?} is not a number")))?;
        out.insert(word, count);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bulk_loader::{load_dataset, LoadOptions};
    use tempfile::TempDir;

    fn loaded(nt: &str) -> (TempDir, PropertyTable) {
        let dir = TempDir::new().unwrap();
        let options = LoadOptions {
            regions: 1,
            ..LoadOptions::default()
        };
        let (table, _) = load_dataset(nt, "ex http://example.org/\n", dir.path(), &options).unwrap();
        (dir, table)
    }

    #[test]
    fn one_subject_with_three_cells_counts_once() {
        let nt = "\
<http://example.org/a> <http://example.org/p1> \"x\" .\n\
<http://example.org/a> <http://example.org/p2> \"y\" .\n\
<http://example.org/a> <http://example.org/p3> \"z\" .\n";
        let (_dir, table) = loaded(nt);
        let histogram = degree_histogram(&table, 2).unwrap();
        assert_eq!(histogram, BTreeMap::from([(3, 1)]));
    }

    #[test]
    fn degrees_group_into_frequencies() {
        let nt = "\
<http://example.org/a> <http://example.org/p> \"1\" .\n\
<http://example.org/b> <http://example.org/p> \"2\" .\n\
<http://example.org/c> <http://example.org/p> \"3\" .\n\
<http://example.org/c> <http://example.org/q> \"4\" .\n";
        let (_dir, table) = loaded(nt);
        let histogram = degree_histogram(&table, 3).unwrap();
        assert_eq!(histogram, BTreeMap::from([(1, 2), (2, 1)]));
    }

    #[test]
    fn word_count_sums_across_documents() {
        let docs = vec![
            "the quick brown fox".to_string(),
            "the lazy dog\nthe end".to_string(),
        ];
        let counts = word_count(&docs, 2).unwrap();
        assert_eq!(counts["the"], 3);
        assert_eq!(counts["fox"], 1);
        assert_eq!(counts.values().sum::<u64>(), 9);
    }
}
