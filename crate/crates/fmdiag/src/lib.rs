//! Command-line interface and benchmark harness over `fmdiag-core`.

pub mod bench;
pub mod cli;
