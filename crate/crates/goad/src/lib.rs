//! File formats, configuration, the evaluation harness and the `goad`
//! command line on top of `goad-core`.

mod bin_io;
pub mod cache;
pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod model_file;
pub mod report;
pub mod schema;
pub mod table;

pub use config::RunConfig;
pub use error::{GoadError, Result};
pub use model_file::ModelFile;
