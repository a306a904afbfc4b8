//! Shared setup for the benchmarks.

use mlgraph_core::{analyze, Analysis, AnalysisConfig, Mode};
use std::path::PathBuf;

/// Path of a fixture project shipped with the repository.
pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn run(name: &str, mode: Mode) -> Analysis {
    analyze(&AnalysisConfig::new(fixture(name)).mode(mode)).expect("fixture analyzes")
}
