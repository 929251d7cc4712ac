//! Bulk dataset loading for the property-table store.
//!
//! Loading runs as a pair of MapReduce jobs: the first extracts the unique
//! subject keys so region boundaries can be sampled from them, the second
//! transforms every triple into a property-table cell and routes it to its
//! region, where the sorted reducer output becomes the installed block files.

mod load;
mod sampler;
mod split;

pub use load::{
    extract_unique_subjects, install_blocks, load_dataset, transform_and_load, LoadOptions,
    LoadReport, LoadStage, TransformStats, DATASET_SIDECAR, PREFIX_SIDECAR, REPORT_SIDECAR,
};
pub use sampler::{sample_split_keys, SamplerConfig};
pub use split::{make_input_splits, SPLIT_TARGET_BYTES};

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Prefix(#[from] rdf_model::PrefixError),
    #[error(transparent)]
    Storage(#[from] storage::StorageError),
    #[error(transparent)]
    Exec(#[from] mapreduce_exec::ExecError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("region count must be a power of two between 1 and 16, got {0}")]
    BadRegionCount(usize),
    #[error("sampling split keys for {need} regions needs at least {need} subjects, got {have}")]
    TooFewKeys { have: usize, need: usize },
    #[error("sampler fractions must lie in (0, 1]")]
    BadSamplerConfig,
}
