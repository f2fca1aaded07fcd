//! JSON run report, schema version 1.

use std::path::Path;

use locale_core::leiden::LevelRecord;
use locale_core::locale::Validation;
use locale_core::{Graph, RunConfig, RunResult};
use serde::Serialize;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub version: &'static str,
    pub dataset: Dataset,
    pub config: RunConfig,
    /// Modularity of the final partition.
    pub modularity: f64,
    pub communities: usize,
    pub iterations: Vec<Iteration>,
    pub trace: Vec<LevelRecord>,
    pub validation: Option<Validation>,
}

#[derive(Debug, Serialize)]
pub struct Dataset {
    pub name: String,
    pub path: String,
    pub weighted: bool,
    pub nodes: usize,
    pub edges: usize,
    pub average_degree: f64,
}

#[derive(Debug, Serialize)]
pub struct Iteration {
    pub iteration: usize,
    pub modularity: f64,
    pub seconds: f64,
}

impl Dataset {
    pub fn describe(path: &Path, weighted: bool, g: &Graph) -> Dataset {
        let edges = g.edge_count();
        Dataset {
            name: path
                .file_stem()
                .map_or_else(String::new, |s| s.to_string_lossy().into_owned()),
            path: path.display().to_string(),
            weighted,
            nodes: g.n(),
            edges,
            average_degree: if g.n() > 0 {
                2.0 * edges as f64 / g.n() as f64
            } else {
                0.0
            },
        }
    }
}

impl Report {
    pub fn new(
        path: &Path,
        weighted: bool,
        g: &Graph,
        cfg: &RunConfig,
        result: &RunResult,
    ) -> Report {
        Report {
            schema: SCHEMA,
            version: env!("CARGO_PKG_VERSION"),
            dataset: Dataset::describe(path, weighted, g),
            config: cfg.clone(),
            modularity: result.modularity,
            communities: result.partition.community_count(),
            iterations: result
                .iteration_modularity
                .iter()
                .zip(&result.iteration_seconds)
                .enumerate()
                .map(|(iteration, (&modularity, &seconds))| Iteration {
                    iteration,
                    modularity,
                    seconds,
                })
                .collect(),
            trace: result.trace.records.clone(),
            validation: result.validation.clone(),
        }
    }
}
