//! Dataset ingestion and preparation: CSV loading, label encoding,
//! normalization to the unit l1 ball, party/test partitioning, and the
//! subsampling and column projection used by the sweeps.

mod prepare;
mod synth;
mod table;

pub use prepare::{normalize, partition, project_dims, subsample, Normalizer, SplitSpec};
pub use synth::synthesize;
pub use table::{label_encode, load_csv, read_csv, ColumnKind, ColumnSchema, RawTable};
