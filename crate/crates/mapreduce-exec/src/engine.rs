use std::sync::Mutex;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("job {job}: reducer count must be at least 1")]
    NoReducers { job: String },
    #[error("job {job}: map failed on split {split}: {message}")]
    MapFailed {
        job: String,
        split: usize,
        message: String,
    },
    #[error("job {job}: reduce failed in reducer {reducer} on key {key:?}: {message}")]
    ReduceFailed {
        job: String,
        reducer: usize,
        key: String,
        message: String,
    },
    #[error("{0}")]
    Plan(String),
}

pub type KeyValue = (String, String);
pub type MapFn<'a> = Box<dyn Fn(&str) -> Result<Vec<KeyValue>, String> + Sync + 'a>;
pub type ReduceFn<'a> = Box<dyn Fn(&str, &[String]) -> Result<Vec<KeyValue>, String> + Sync + 'a>;
pub type PartitionFn<'a> = Box<dyn Fn(&str, usize) -> usize + Sync + 'a>;

/// One map-shuffle-reduce job. The reduce function defaults to the identity
/// (every shuffled pair is emitted as-is) and the partitioner defaults to
/// hashing the key modulo the reducer count.
pub struct MrJob<'a> {
    pub name: String,
    pub reducers: usize,
    pub map: MapFn<'a>,
    pub reduce: Option<ReduceFn<'a>>,
    pub partition: PartitionFn<'a>,
}

impl<'a> MrJob<'a> {
    pub fn new(name: impl Into<String>, reducers: usize, map: MapFn<'a>) -> Self {
        MrJob {
            name: name.into(),
            reducers,
            map,
            reduce: None,
            partition: Box::new(default_partition),
        }
    }

    pub fn with_reduce(mut self, reduce: ReduceFn<'a>) -> Self {
        self.reduce = Some(reduce);
        self
    }

    pub fn with_partition(mut self, partition: PartitionFn<'a>) -> Self {
        self.partition = partition;
        self
    }
}

/// Counters for one executed job.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct StageMetrics {
    pub stage: String,
    pub records_in: u64,
    pub records_shuffled: u64,
    pub bytes_shuffled: u64,
    pub records_out: u64,
    pub blocks_read: u64,
    pub blocks_skipped: u64,
}

/// Rolled-up counters across all stages of a query.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct ExecMetrics {
    pub stages: Vec<StageMetrics>,
}

impl ExecMetrics {
    pub fn push(&mut self, stage: StageMetrics) {
        self.stages.push(stage);
    }

    pub fn total_shuffled_records(&self) -> u64 {
        self.stages.iter().map(|s| s.records_shuffled).sum()
    }

    pub fn total_shuffled_bytes(&self) -> u64 {
        self.stages.iter().map(|s| s.bytes_shuffled).sum()
    }

    pub fn total_blocks_read(&self) -> u64 {
        self.stages.iter().map(|s| s.blocks_read).sum()
    }

    pub fn total_blocks_skipped(&self) -> u64 {
        self.stages.iter().map(|s| s.blocks_skipped).sum()
    }
}

/// FNV-1a 64-bit hash of the key bytes, reduced modulo the reducer count.
pub fn default_partition(key: &str, reducers: usize) -> usize {
    (fnv1a64(key.as_bytes()) % reducers as u64) as usize
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

struct Intermediate {
    key: String,
    value: String,
    split: usize,
    seq: usize,
}

/// Run tasks indexed 0..n on up to `parallelism` scoped threads and return
/// results in index order. Task failures surface as Err keyed by the lowest
/// failing index so the outcome does not depend on thread timing.
fn run_indexed<T, E, F>(n: usize, parallelism: usize, task: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync,
{
    let workers = parallelism.max(1).min(n.max(1));
    if workers <= 1 || n <= 1 {
        return (0..n).map(&task).collect();
    }
    let slots: Vec<Mutex<Option<Result<T, E>>>> = (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for w in 0..workers {
            let slots = &slots;
            let task = &task;
            scope.spawn(move || {
                let mut i = w;
                while i < n {
                    let result = task(i);
                    *slots[i].lock().unwrap() = Some(result);
                    i += workers;
                }
            });
        }
    });
    let mut out = Vec::with_capacity(n);
    let mut first_err: Option<E> = None;
    for slot in slots {
        match slot.into_inner().unwrap().expect("worker filled every slot") {
            Ok(v) => out.push(v),
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    match first_err {
        None => Ok(out),
        Some(e) => Err(e),
    }
}

/// Execute one job over the given input splits.
///
/// The output is deterministic for any parallelism degree: map outputs keep
/// their per-split order, the shuffle sorts by key with a (split, sequence)
/// tiebreak, and reducer outputs concatenate in reducer index order.
pub fn run_job(
    job: &MrJob,
    splits: &[Vec<String>],
    parallelism: usize,
) -> Result<(Vec<KeyValue>, StageMetrics), ExecError> {
    if job.reducers == 0 {
        return Err(ExecError::NoReducers {
            job: job.name.clone(),
        });
    }
    let mut metrics = StageMetrics {
        stage: job.name.clone(),
        records_in: splits.iter().map(|s| s.len() as u64).sum(),
        ..StageMetrics::default()
    };

    let map_outputs: Vec<Vec<KeyValue>> =
        run_indexed(splits.len(), parallelism, |i| -> Result<_, ExecError> {
            let mut out = Vec::new();
            for record in &splits[i] {
                match (job.map)(record) {
                    Ok(pairs) => out.extend(pairs),
                    Err(message) => {
                        return Err(ExecError::MapFailed {
                            job: job.name.clone(),
                            split: i,
                            message,
                        })
                    }
                }
            }
            Ok(out)
        })?;

    let mut partitions: Vec<Vec<Intermediate>> = (0..job.reducers).map(|_| Vec::new()).collect();
    for (split, pairs) in map_outputs.into_iter().enumerate() {
        for (seq, (key, value)) in pairs.into_iter().enumerate() {
            metrics.records_shuffled += 1;
            metrics.bytes_shuffled += (key.len() + value.len()) as u64;
            let r = (job.partition)(&key, job.reducers).min(job.reducers - 1);
            partitions[r].push(Intermediate {
                key,
                value,
                split,
                seq,
            });
        }
    }

    let reduced: Vec<Vec<KeyValue>> =
        run_indexed(partitions.len(), parallelism, |r| -> Result<_, ExecError> {
            let mut records: Vec<&Intermediate> = partitions[r].iter().collect();
            records.sort_by(|a, b| {
                a.key
                    .cmp(&b.key)
                    .then(a.split.cmp(&b.split))
                    .then(a.seq.cmp(&b.seq))
            });
            let mut out = Vec::new();
            let mut i = 0;
            while i < records.len() {
                let mut j = i + 1;
                while j < records.len() && records[j].key == records[i].key {
                    j += 1;
                }
                match &job.reduce {
                    None => {
                        for rec in &records[i..j] {
                            out.push((rec.key.clone(), rec.value.clone()));
                        }
                    }
                    Some(reduce) => {
                        let values: Vec<String> =
                            records[i..j].iter().map(|r| r.value.clone()).collect();
                        match reduce(&records[i].key, &values) {
                            Ok(pairs) => out.extend(pairs),
                            Err(message) => {
                                return Err(ExecError::ReduceFailed {
                                    job: job.name.clone(),
                                    reducer: r,
                                    key: records[i].key.clone(),
                                    message,
                                })
                            }
                        }
                    }
                }
                i = j;
            }
            Ok(out)
        })?;

    let mut output = Vec::new();
    for chunk in reduced {
        output.extend(chunk);
    }
    metrics.records_out = output.len() as u64;
    Ok((output, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word_count_job(reducers: usize) -> MrJob<'static> {
        let map: MapFn = Box::new(|record| {
            Ok(record
                .split_whitespace()
                .map(|w| (w.to_string(), "1".to_string()))
                .collect())
        });
        let reduce: ReduceFn = Box::new(|key, values| {
            let total: u64 = values.iter().map(|v| v.parse::<u64>().unwrap_or(0)).sum();
            Ok(vec![(key.to_string(), total.to_string())])
        });
        MrJob::new("word-count", reducers, map).with_reduce(reduce)
    }

    fn sorted(mut pairs: Vec<KeyValue>) -> Vec<KeyValue> {
        pairs.sort();
        pairs
    }

    #[test]
    fn word_count_sums_per_word() {
        let splits = vec![vec!["a b a".to_string()]];
        let (out, metrics) = run_job(&word_count_job(2), &splits, 1).unwrap();
        assert_eq!(
            sorted(out),
            vec![
                ("a".to_string(), "2".to_string()),
                ("b".to_string(), "1".to_string())
            ]
        );
        assert_eq!(metrics.records_in, 1);
        assert_eq!(metrics.records_shuffled, 3);
        assert_eq!(metrics.records_out, 2);
    }

    #[test]
    fn empty_input_is_empty_output() {
        let (out, metrics) = run_job(&word_count_job(3), &[], 4).unwrap();
        assert!(out.is_empty());
        assert_eq!(metrics.records_in, 0);
        assert_eq!(metrics.records_out, 0);
    }

    #[test]
    fn identity_reduce_preserves_the_multiset_sorted() {
        let map: MapFn = Box::new(|record| {
            let (k, v) = record.split_once('=').unwrap();
            Ok(vec![(k.to_string(), v.to_string())])
        });
        let job = MrJob::new("identity", 1, map);
        let splits = vec![
            vec!["b=1".to_string(), "a=2".to_string()],
            vec!["a=3".to_string()],
        ];
        let (out, _) = run_job(&job, &splits, 1).unwrap();
        assert_eq!(
            out,
            vec![
                ("a".to_string(), "2".to_string()),
                ("a".to_string(), "3".to_string()),
                ("b".to_string(), "1".to_string()),
            ]
        );
    }

    #[test]
    fn output_is_independent_of_parallelism() {
        // A reduce that concatenates values is order-sensitive, so this also
        // pins the shuffle's value ordering.
        let make_job = || {
            let map: MapFn = Box::new(|record| {
                let (k, v) = record.split_once('=').unwrap();
                Ok(vec![(k.to_string(), v.to_string())])
            });
            let reduce: ReduceFn =
                Box::new(|key, values| Ok(vec![(key.to_string(), values.join(","))]));
            MrJob::new("concat", 4, map).with_reduce(reduce)
        };
        let splits: Vec<Vec<String>> = (0..8)
            .map(|s| (0..50).map(|i| format!("k{}={}:{}", i % 7, s, i)).collect())
            .collect();
        let baseline = run_job(&make_job(), &splits, 1).unwrap().0;
        for parallelism in [2, 3, 8] {
            let out = run_job(&make_job(), &splits, parallelism).unwrap().0;
            assert_eq!(out, baseline, "parallelism {}", parallelism);
        }
    }

    #[test]
    fn default_partition_is_stable_and_balanced() {
        assert_eq!(default_partition("anything", 1), 0);
        assert_eq!(
            default_partition("same-key", 8),
            default_partition("same-key", 8)
        );
        let mut counts = [0u32; 4];
        for i in 0..10_000 {
            counts[default_partition(&format!("key-{}", i), 4)] += 1;
        }
        for c in counts {
            assert!((1875..=3125).contains(&c), "unbalanced: {:?}", counts);
        }
    }

    #[test]
    fn map_failures_identify_the_split() {
        let map: MapFn = Box::new(|record| {
            if record == "bad" {
                Err("boom".to_string())
            } else {
                Ok(vec![(record.to_string(), String::new())])
            }
        });
        let job = MrJob::new("failing", 2, map);
        let splits = vec![vec!["ok".to_string()], vec!["bad".to_string()]];
        match run_job(&job, &splits, 2) {
            Err(ExecError::MapFailed { split, .. }) => assert_eq!(split, 1),
            other => panic!("unexpected {:?}", other.map(|_| ())),
        }
    }
}
