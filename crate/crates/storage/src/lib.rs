//! Property-table storage: a wide table keyed by subject, persisted as
//! sorted block files with bloom-filtered trailers, partitioned into
//! contiguous key regions.

mod block;
mod bloom;
mod table;

use std::path::PathBuf;

use thiserror::Error;

pub use block::{read_block_entries, read_block_meta, write_block, BlockMeta, CellKey};
pub use bloom::{BloomFilter, DEFAULT_FP_TARGET};
pub use table::{BlockId, BlockStats, PropertyTable, Region, RowCells, DEFAULT_BLOCK_CAPACITY};

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt block file {path}: {detail}")]
    Corrupt { path: PathBuf, detail: String },
    #[error("bad manifest {path}: {detail}")]
    Manifest { path: PathBuf, detail: String },
    #[error("row or column is empty or contains a NUL byte: {0:?}")]
    InvalidKey(String),
    #[error("split keys must be strictly ascending and NUL-free")]
    InvalidSplits,
    #[error("table at {0} is sealed and read-only")]
    ReadOnly(PathBuf),
    #[error("unknown block id")]
    UnknownBlock,
    #[error("block entries are not sorted by cell key")]
    UnsortedBlock,
    #[error("row {row:?} does not belong to region {region}")]
    BlockOutsideRegion { row: String, region: usize },
}
