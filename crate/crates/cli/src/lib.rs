//! Command-line front end: data ingestion, network documents, exporters and
//! the command implementations behind the `pcornet` binary.

pub mod args;
pub mod document;
pub mod export;
pub mod input;
pub mod run;
