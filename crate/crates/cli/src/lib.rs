//! Library half of the `locale` binary: report types, the benchmark
//! manifest and table, and dataset loading.

pub mod bench;
pub mod report;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{Context, Result};
use locale_core::Graph;

pub fn load_graph(path: &Path, weighted: bool) -> Result<Graph> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Graph::load_edge_list(BufReader::new(file), weighted)
        .with_context(|| format!("cannot read {}", path.display()))
}
