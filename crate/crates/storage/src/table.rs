use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rdf_model::{PredicateTypeMap, PrimitiveValue};
use serde::{Deserialize, Serialize};

use crate::block::{read_block_entries, read_block_meta, write_block, BlockMeta, CellKey};
use crate::StorageError;

pub const DEFAULT_BLOCK_CAPACITY: usize = 4096;
const MANIFEST_NAME: &str = "manifest.json";

/// One contiguous row-key range of the table. The range is start-inclusive:
/// region i holds rows in [split[i-1], split[i]).
#[derive(Debug)]
pub struct Region {
    pub index: usize,
    dir: PathBuf,
    blocks: Vec<BlockMeta>,
    mem: Vec<(CellKey, PrimitiveValue)>,
    next_block: usize,
}

impl Region {
    pub fn blocks(&self) -> &[BlockMeta] {
        &self.blocks
    }
}

#[derive(Serialize, Deserialize)]
struct RegionManifest {
    blocks: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    column_family: String,
    block_capacity: usize,
    split_keys: Vec<String>,
    entries: u64,
    type_map: PredicateTypeMap,
    regions: Vec<RegionManifest>,
}

/// Identifies one sealed block within the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockId {
    pub region: usize,
    pub block: usize,
}

/// Block access counters for one read operation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BlockStats {
    pub read: u64,
    pub skipped: u64,
}

/// All cells of one row: column name to values, newest first.
pub type RowCells = BTreeMap<String, Vec<PrimitiveValue>>;

/// The wide table: one row per subject, one column per predicate, cells
/// timestamped so multiple objects for the same (subject, predicate) stack
/// in a single column. Absent predicates occupy no storage at all.
#[derive(Debug)]
pub struct PropertyTable {
    dir: PathBuf,
    split_keys: Vec<String>,
    block_capacity: usize,
    type_map: PredicateTypeMap,
    entries: u64,
    regions: Vec<Region>,
    writable: bool,
}

fn key_component_ok(s: &str) -> bool {
    !s.is_empty() && !s.bytes().any(|b| b == 0)
}

impl PropertyTable {
    /// Create a fresh writable table under `dir`. `split_keys` must be
    /// strictly ascending and NUL-free; n split keys make n+1 regions.
    pub fn create(
        dir: &Path,
        split_keys: Vec<String>,
        block_capacity: usize,
    ) -> Result<Self, StorageError> {
        if !split_keys.windows(2).all(|w| w[0] < w[1])
            || split_keys.iter().any(|k| !key_component_ok(k))
        {
            return Err(StorageError::InvalidSplits);
        }
        let io = |source, path: &Path| StorageError::Io {
            path: path.to_path_buf(),
            source,
        };
        fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
        let mut regions = Vec::new();
        for index in 0..=split_keys.len() {
            let region_dir = dir.join(format!("r{:03}", index));
            fs::create_dir_all(&region_dir).map_err(|e| io(e, &region_dir))?;
            regions.push(Region {
                index,
                dir: region_dir,
                blocks: Vec::new(),
                mem: Vec::new(),
                next_block: 0,
            });
        }
        Ok(PropertyTable {
            dir: dir.to_path_buf(),
            split_keys,
            block_capacity: block_capacity.max(1),
            type_map: PredicateTypeMap::new(),
            entries: 0,
            regions,
            writable: true,
        })
    }

    /// Open a sealed table: parse the manifest and load every block trailer.
    pub fn open(dir: &Path) -> Result<Self, StorageError> {
        let manifest_path = dir.join(MANIFEST_NAME);
        let text = fs::read_to_string(&manifest_path).map_err(|source| StorageError::Io {
            path: manifest_path.clone(),
            source,
        })?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| StorageError::Manifest {
                path: manifest_path.clone(),
                detail: e.to_string(),
            })?;
        if manifest.version != 1 {
            return Err(StorageError::Manifest {
                path: manifest_path,
                detail: format!("unsupported version {}", manifest.version),
            });
        }
        let mut regions = Vec::new();
        for (index, rm) in manifest.regions.iter().enumerate() {
            let region_dir = dir.join(format!("r{:03}", index));
            let mut blocks = Vec::new();
            for name in &rm.blocks {
                blocks.push(read_block_meta(&dir.join(name))?);
            }
            regions.push(Region {
                index,
                dir: region_dir,
                next_block: blocks.len(),
                blocks,
                mem: Vec::new(),
            });
        }
        Ok(PropertyTable {
            dir: dir.to_path_buf(),
            split_keys: manifest.split_keys,
            block_capacity: manifest.block_capacity,
            type_map: manifest.type_map,
            entries: manifest.entries,
            regions,
            writable: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn split_keys(&self) -> &[String] {
        &self.split_keys
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn entry_count(&self) -> u64 {
        self.entries
    }

    pub fn block_capacity(&self) -> usize {
        self.block_capacity
    }

    pub fn type_map(&self) -> &PredicateTypeMap {
        &self.type_map
    }

    pub fn set_type_map(&mut self, map: PredicateTypeMap) {
        self.type_map = map;
    }

    /// Region index owning a row key (start-inclusive boundaries).
    pub fn region_for_key(&self, key: &str) -> usize {
        self.split_keys.partition_point(|s| s.as_str() <= key)
    }

    /// Insert one cell. Seals the target region's buffer into a block file
    /// when it reaches the block capacity.
    pub fn put(
        &mut self,
        row: &str,
        col: &str,
        ts: u64,
        value: PrimitiveValue,
    ) -> Result<(), StorageError> {
        if !self.writable {
            return Err(StorageError::ReadOnly(self.dir.clone()));
        }
        if !key_component_ok(row) {
            return Err(StorageError::InvalidKey(row.to_string()));
        }
        if !key_component_ok(col) {
            return Err(StorageError::InvalidKey(col.to_string()));
        }
        let region = self.region_for_key(row);
        self.regions[region]
            .mem
            .push((CellKey::new(row, col, ts), value));
        self.entries += 1;
        if self.regions[region].mem.len() >= self.block_capacity {
            self.seal_region(region)?;
        }
        Ok(())
    }

    /// Attach one pre-sorted block directly to a region, bypassing the put
    /// buffer. Every row in the block must belong to the target region.
    pub fn install_block(
        &mut self,
        region: usize,
        entries: &[(CellKey, PrimitiveValue)],
    ) -> Result<(), StorageError> {
        if !self.writable {
            return Err(StorageError::ReadOnly(self.dir.clone()));
        }
        if entries.is_empty() {
            return Ok(());
        }
        if region >= self.regions.len() {
            return Err(StorageError::BlockOutsideRegion {
                row: entries[0].0.row.clone(),
                region,
            });
        }
        if !entries.windows(2).all(|w| w[0].0 <= w[1].0) {
            return Err(StorageError::UnsortedBlock);
        }
        for (key, _) in entries {
            if !key_component_ok(&key.row) || !key_component_ok(&key.col) {
                return Err(StorageError::InvalidKey(key.row.clone()));
            }
            if self.region_for_key(&key.row) != region {
                return Err(StorageError::BlockOutsideRegion {
                    row: key.row.clone(),
                    region,
                });
            }
        }
        let r = &mut self.regions[region];
        let path = r.dir.join(format!("b{:05}.blk", r.next_block));
        r.next_block += 1;
        let meta = write_block(&path, entries)?;
        r.blocks.push(meta);
        self.entries += entries.len() as u64;
        Ok(())
    }

    fn seal_region(&mut self, index: usize) -> Result<(), StorageError> {
        let region = &mut self.regions[index];
        if region.mem.is_empty() {
            return Ok(());
        }
        let mut entries = std::mem::take(&mut region.mem);
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let path = region.dir.join(format!("b{:05}.blk", region.next_block));
        region.next_block += 1;
        let meta = write_block(&path, &entries)?;
        region.blocks.push(meta);
        Ok(())
    }

    /// Seal all buffered cells and write the manifest. The table becomes
    /// read-only.
    pub fn finish(&mut self) -> Result<(), StorageError> {
        if !self.writable {
            return Err(StorageError::ReadOnly(self.dir.clone()));
        }
        for i in 0..self.regions.len() {
            self.seal_region(i)?;
        }
        let manifest = Manifest {
            version: 1,
            column_family: "p".to_string(),
            block_capacity: self.block_capacity,
            split_keys: self.split_keys.clone(),
            entries: self.entries,
            type_map: self.type_map.clone(),
            regions: self
                .regions
                .iter()
                .map(|r| RegionManifest {
                    blocks: r
                        .blocks
                        .iter()
                        .map(|b| {
                            format!(
                                "r{:03}/{}",
                                r.index,
                                b.path.file_name().unwrap().to_string_lossy()
                            )
                        })
                        .collect(),
                })
                .collect(),
        };
        let path = self.dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text).map_err(|source| StorageError::Io { path, source })?;
        self.writable = false;
        Ok(())
    }

    /// All sealed blocks in (region, block) order.
    pub fn blocks(&self) -> Vec<BlockId> {
        let mut out = Vec::new();
        for (region, r) in self.regions.iter().enumerate() {
            for block in 0..r.blocks.len() {
                out.push(BlockId { region, block });
            }
        }
        out
    }

    pub fn block_meta(&self, id: BlockId) -> Result<&BlockMeta, StorageError> {
        self.regions
            .get(id.region)
            .and_then(|r| r.blocks.get(id.block))
            .ok_or(StorageError::UnknownBlock)
    }

    pub fn read_block(&self, id: BlockId) -> Result<Vec<(CellKey, PrimitiveValue)>, StorageError> {
        let meta = self.block_meta(id)?;
        read_block_entries(&meta.path)
    }

    /// Bloom filter probe for a (row, column) pair against one block.
    pub fn bloom_check(&self, id: BlockId, row: &str, col: &str) -> Result<bool, StorageError> {
        Ok(self.block_meta(id)?.might_contain(row, col))
    }

    /// Fetch one row, optionally restricted to a column set. Column-restricted
    /// reads consult each candidate block's bloom filter and skip blocks with
    /// no possible match; values per column come back newest-first.
    pub fn get_cells(
        &self,
        row: &str,
        cols: Option<&BTreeSet<String>>,
    ) -> Result<(RowCells, BlockStats), StorageError> {
        let mut stats = BlockStats::default();
        let region = &self.regions[self.region_for_key(row)];
        let mut hits: BTreeMap<String, Vec<(u64, PrimitiveValue)>> = BTreeMap::new();
        for meta in &region.blocks {
            if !meta.covers_row(row) {
                stats.skipped += 1;
                continue;
            }
            if let Some(cols) = cols {
                if !cols.iter().any(|c| meta.might_contain(row, c)) {
                    stats.skipped += 1;
                    continue;
                }
            }
            stats.read += 1;
            for (key, value) in read_block_entries(&meta.path)? {
                if key.row == row && cols.map_or(true, |c| c.contains(&key.col)) {
                    hits.entry(key.col).or_default().push((key.ts, value));
                }
            }
        }
        for (key, value) in &region.mem {
            if key.row == row && cols.map_or(true, |c| c.contains(&key.col)) {
                hits.entry(key.col.clone())
                    .or_default()
                    .push((key.ts, value.clone()));
            }
        }
        let cells = hits
            .into_iter()
            .map(|(col, mut vs)| {
                vs.sort_by(|a, b| b.0.cmp(&a.0));
                (col, vs.into_iter().map(|(_, v)| v).collect())
            })
            .collect();
        Ok((cells, stats))
    }

    pub fn get_row(&self, row: &str) -> Result<(RowCells, BlockStats), StorageError> {
        self.get_cells(row, None)
    }

    /// All cells with row keys in [start, end), fully sorted. `None` bounds
    /// are unbounded.
    pub fn scan(
        &self,
        start: Option<&str>,
        end: Option<&str>,
    ) -> Result<(Vec<(CellKey, PrimitiveValue)>, BlockStats), StorageError> {
        let mut stats = BlockStats::default();
        let in_range = |row: &str| {
            start.map_or(true, |s| row >= s) && end.map_or(true, |e| row < e)
        };
        let mut out = Vec::new();
        for region in &self.regions {
            for meta in &region.blocks {
                let disjoint = start.map_or(false, |s| meta.last.row.as_str() < s)
                    || end.map_or(false, |e| meta.first.row.as_str() >= e);
                if disjoint {
                    stats.skipped += 1;
                    continue;
                }
                stats.read += 1;
                for (key, value) in read_block_entries(&meta.path)? {
                    if in_range(&key.row) {
                        out.push((key, value));
                    }
                }
            }
            for (key, value) in &region.mem {
                if in_range(&key.row) {
                    out.push((key.clone(), value.clone()));
                }
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok((out, stats))
    }
}
