//! File formats and experiment orchestration behind the `meg` binary.

pub mod config;
pub mod error;
pub mod ingest;
pub mod paramfile;
pub mod run;
pub mod split;

pub use config::{Method, Overrides, RunConfig};
pub use error::{CliError, Result};
pub use ingest::{ingest, write_events, Dataset, GraphDecl, IngestReport, LabelSource, Labels};
pub use paramfile::ParamFile;
pub use run::{run, Command, Outcome};
pub use split::{split, SplitSummary};
