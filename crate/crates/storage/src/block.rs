use std::fs;
use std::path::{Path, PathBuf};

use rdf_model::PrimitiveValue;

use crate::bloom::{BloomFilter, DEFAULT_FP_TARGET};
use crate::StorageError;

/// Full coordinate of one stored cell. Ordering is lexicographic over
/// (row, column, timestamp), which the byte encoding preserves.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellKey {
    pub row: String,
    pub col: String,
    pub ts: u64,
}

impl CellKey {
    pub fn new(row: impl Into<String>, col: impl Into<String>, ts: u64) -> Self {
        CellKey {
            row: row.into(),
            col: col.into(),
            ts,
        }
    }

    /// Byte form `row \0 col \0 ts_be`. Row and column are NUL-free, so the
    /// encoding is prefix-unambiguous and sorts exactly like the struct.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.row.len() + self.col.len() + 10);
        out.extend_from_slice(self.row.as_bytes());
        out.push(0);
        out.extend_from_slice(self.col.as_bytes());
        out.push(0);
        out.extend_from_slice(&self.ts.to_be_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Option<CellKey> {
        let row_end = bytes.iter().position(|&b| b == 0)?;
        let rest = &bytes[row_end + 1..];
        let col_end = rest.iter().position(|&b| b == 0)?;
        let ts_bytes = &rest[col_end + 1..];
        if ts_bytes.len() != 8 {
            return None;
        }
        Some(CellKey {
            row: String::from_utf8(bytes[..row_end].to_vec()).ok()?,
            col: String::from_utf8(rest[..col_end].to_vec()).ok()?,
            ts: u64::from_be_bytes(ts_bytes.try_into().ok()?),
        })
    }
}

/// In-memory summary of one sealed block file: key range, entry count, and
/// the (row, column) bloom filter from the file trailer.
#[derive(Debug, Clone)]
pub struct BlockMeta {
    pub path: PathBuf,
    pub first: CellKey,
    pub last: CellKey,
    pub entries: u64,
    pub bloom: BloomFilter,
}

impl BlockMeta {
    /// Row-range check: can this block contain the row at all?
    pub fn covers_row(&self, row: &str) -> bool {
        self.first.row.as_str() <= row && row <= self.last.row.as_str()
    }

    pub fn might_contain(&self, row: &str, col: &str) -> bool {
        self.bloom.contains(&BloomFilter::pair_key(row, col))
    }
}

const BLOCK_MAGIC: &[u8; 4] = b"BLK1";
const END_MAGIC: &[u8; 4] = b"END1";

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_bytes(buf: &mut Vec<u8>, bytes: &[u8]) {
    push_u32(buf, bytes.len() as u32);
    buf.extend_from_slice(bytes);
}

struct Reader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn corrupt(&self, detail: impl Into<String>) -> StorageError {
        StorageError::Corrupt {
            path: self.path.to_path_buf(),
            detail: detail.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], StorageError> {
        if self.pos + n > self.bytes.len() {
            return Err(self.corrupt("unexpected end of file"));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, StorageError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, StorageError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn sized_bytes(&mut self) -> Result<&'a [u8], StorageError> {
        let len = self.u32()? as usize;
        self.take(len)
    }

    fn cell_key(&mut self) -> Result<CellKey, StorageError> {
        let bytes = self.sized_bytes()?;
        CellKey::decode(bytes).ok_or_else(|| self.corrupt("undecodable cell key"))
    }
}

/// Write one sealed block: length-prefixed (key, value) records followed by
/// a trailer holding the first/last key and the bloom filter bits.
/// Entries must already be sorted by key.
pub fn write_block(
    path: &Path,
    entries: &[(CellKey, PrimitiveValue)],
) -> Result<BlockMeta, StorageError> {
    assert!(!entries.is_empty(), "blocks are never empty");
    debug_assert!(entries.windows(2).all(|w| w[0].0 <= w[1].0));

    let mut bloom = BloomFilter::with_capacity(entries.len(), DEFAULT_FP_TARGET);
    for (key, _) in entries {
        bloom.insert(&BloomFilter::pair_key(&key.row, &key.col));
    }

    let mut buf = Vec::new();
    buf.extend_from_slice(BLOCK_MAGIC);
    push_u32(&mut buf, entries.len() as u32);
    let trailer_offset_pos = buf.len();
    push_u64(&mut buf, 0);
    for (key, value) in entries {
        push_bytes(&mut buf, &key.encode());
        push_bytes(&mut buf, value.encode().as_bytes());
    }
    let trailer_offset = buf.len() as u64;
    buf[trailer_offset_pos..trailer_offset_pos + 8].copy_from_slice(&trailer_offset.to_le_bytes());

    let first = entries.first().unwrap().0.clone();
    let last = entries.last().unwrap().0.clone();
    push_bytes(&mut buf, &first.encode());
    push_bytes(&mut buf, &last.encode());
    push_u64(&mut buf, bloom.bit_count());
    push_u32(&mut buf, bloom.probe_count());
    push_u32(&mut buf, bloom.words().len() as u32);
    for word in bloom.words() {
        push_u64(&mut buf, *word);
    }
    buf.extend_from_slice(END_MAGIC);

    fs::write(path, &buf).map_err(|source| StorageError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(BlockMeta {
        path: path.to_path_buf(),
        first,
        last,
        entries: entries.len() as u64,
        bloom,
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>, StorageError> {
    fs::read(path).map_err(|source| StorageError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn check_header<'a>(path: &'a Path, bytes: &'a [u8]) -> Result<(Reader<'a>, u32, u64), StorageError> {
    let mut r = Reader {
        path,
        bytes,
        pos: 0,
    };
    if r.take(4)? != BLOCK_MAGIC {
        return Err(r.corrupt("bad magic"));
    }
    let count = r.u32()?;
    let trailer_offset = r.u64()?;
    Ok((r, count, trailer_offset))
}

/// Read only the trailer of a block file.
pub fn read_block_meta(path: &Path) -> Result<BlockMeta, StorageError> {
    let bytes = read_file(path)?;
    let (mut r, count, trailer_offset) = check_header(path, &bytes)?;
    if trailer_offset as usize > bytes.len() {
        return Err(r.corrupt("trailer offset out of range"));
    }
    r.pos = trailer_offset as usize;
    let first = r.cell_key()?;
    let last = r.cell_key()?;
    let bits = r.u64()?;
    let probes = r.u32()?;
    let word_count = r.u32()? as usize;
    let mut words = Vec::with_capacity(word_count);
    for _ in 0..word_count {
        words.push(r.u64()?);
    }
    if r.take(4)? != END_MAGIC {
        return Err(r.corrupt("missing end magic"));
    }
    Ok(BlockMeta {
        path: path.to_path_buf(),
        first,
        last,
        entries: count as u64,
        bloom: BloomFilter::from_parts(bits, probes, words),
    })
}

/// Read all entries of a block file, in stored (sorted) order.
pub fn read_block_entries(path: &Path) -> Result<Vec<(CellKey, PrimitiveValue)>, StorageError> {
    let bytes = read_file(path)?;
    let (mut r, count, _) = check_header(path, &bytes)?;
    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let key = r.cell_key()?;
        let raw = r.sized_bytes()?;
        let text = std::str::from_utf8(raw).map_err(|_| r.corrupt("non-utf8 value"))?;
        let value = PrimitiveValue::decode(text)
            .ok_or_else(|| r.corrupt(format!("undecodable value {:?}", text)))?;
        entries.push((key, value));
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_key_encoding_round_trips_and_preserves_order() {
        let keys = vec![
            CellKey::new("alice", "age", 0),
            CellKey::new("alice", "age", 7),
            CellKey::new("alice", "name", 1),
            CellKey::new("bob", "age", 0),
            CellKey::new("bob!", "a", 0),
        ];
        for k in &keys {
            assert_eq!(CellKey::decode(&k.encode()).as_ref(), Some(k));
        }
        for a in &keys {
            for b in &keys {
                assert_eq!(
                    a.encode().cmp(&b.encode()),
                    a.cmp(b),
                    "byte order mismatch for {:?} vs {:?}",
                    a,
                    b
                );
            }
        }
        assert_eq!(CellKey::decode(b"noseparators"), None);
    }

    #[test]
    fn block_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b0.blk");
        let entries = vec![
            (
                CellKey::new("r1", "age", 1),
                PrimitiveValue::Integer(30),
            ),
            (
                CellKey::new("r1", "name", 2),
                PrimitiveValue::Str("Ada".into()),
            ),
            (
                CellKey::new("r2", "name", 3),
                PrimitiveValue::Str("Bo".into()),
            ),
        ];
        let meta = write_block(&path, &entries).unwrap();
        assert_eq!(meta.first, entries[0].0);
        assert_eq!(meta.last, entries[2].0);
        assert_eq!(meta.entries, 3);

        let reread = read_block_entries(&path).unwrap();
        assert_eq!(reread, entries);

        let meta2 = read_block_meta(&path).unwrap();
        assert_eq!(meta2.first, meta.first);
        assert_eq!(meta2.last, meta.last);
        assert_eq!(meta2.entries, 3);
        assert!(meta2.might_contain("r1", "age"));
        assert!(meta2.covers_row("r1"));
        assert!(!meta2.covers_row("zz"));
    }

    #[test]
    fn corrupt_files_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.blk");
        std::fs::write(&path, b"XXXX").unwrap();
        match read_block_meta(&path) {
            Err(StorageError::Corrupt { .. }) => {}
            other => panic!("unexpected {:?}", other.map(|_| ())),
        }
    }
}
