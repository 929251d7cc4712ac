/// Target byte size of one map input split.
pub const SPLIT_TARGET_BYTES: usize = 64 * 1024;

/// Chop a dataset into line-aligned input splits of roughly `target_bytes`
/// each. Every record carries its 1-based line number as a `"{line}\t{text}"`
/// tag so map tasks can report positions no matter which split they run in.
pub fn make_input_splits(text: &str, target_bytes: usize) -> Vec<Vec<String>> {
    let mut splits = Vec::new();
    let mut current = Vec::new();
    let mut bytes = 0usize;
    for (idx, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        bytes += line.len() + 1;
        current.push(format!("{}\t{}", idx + 1, line));
        if bytes >= target_bytes {
            splits.push(std::mem::take(&mut current));
            bytes = 0;
        }
    }
    if !current.is_empty() {
        splits.push(current);
    }
    splits
}

/// Split a tagged record back into its line number and text.
pub(crate) fn tagged_record(record: &str) -> (usize, &str) {
    match record.split_once('\t') {
        Some((line, text)) => (line.parse().unwrap_or(0), text),
        None => (0, record),
    }
}
