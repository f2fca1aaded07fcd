//! Manifest-driven benchmark tables.
//!
//! The `local` table compares one level of local moves from singletons:
//! greedy moves, and Locale embeddings run for 2 rounds or to convergence
//! followed by rounding. The `multilevel` table runs the full Louvain,
//! Leiden and Leiden-Locale drivers.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use locale_core::graph::modularity;
use locale_core::leiden::greedy_local_move;
use locale_core::{
    leiden_locale, locale_embeddings, locale_rounding, Algorithm, Graph, InnerRounds,
    LocaleOptions, Partition, RunConfig,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// TOML manifest listing datasets and settings.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Table file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Rows run concurrently. Timings are only comparable with 1.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Table {
    Local,
    Multilevel,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default = "default_tables")]
    pub tables: Vec<Table>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(rename = "dataset", default)]
    pub datasets: Vec<DatasetEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: String,
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    #[serde(default)]
    pub weighted: bool,
}

fn default_tables() -> Vec<Table> {
    vec![Table::Local, Table::Multilevel]
}

fn default_k() -> usize {
    8
}

fn default_iterations() -> usize {
    1
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Manifest> {
        let m: Manifest = toml::from_str(text)?;
        anyhow::ensure!(m.k >= 1, "k must be at least 1");
        anyhow::ensure!(m.iterations >= 1, "iterations must be at least 1");
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy)]
enum Job {
    Greedy,
    LocaleRounds(InnerRounds),
    Driver(Algorithm),
}

impl Job {
    fn table(self) -> Table {
        match self {
            Job::Greedy | Job::LocaleRounds(_) => Table::Local,
            Job::Driver(_) => Table::Multilevel,
        }
    }

    fn names(self) -> (&'static str, &'static str) {
        match self {
            Job::Greedy => ("greedy", "local moves"),
            Job::LocaleRounds(InnerRounds::Two) => ("locale", "2 rounds"),
            Job::LocaleRounds(InnerRounds::Full) => ("locale", "full update"),
            Job::Driver(Algorithm::Louvain) => ("louvain", "multilevel"),
            Job::Driver(Algorithm::Leiden) => ("leiden", "multilevel"),
            Job::Driver(Algorithm::Locale) => ("locale", "multilevel"),
        }
    }

    fn jobs(table: Table) -> &'static [Job] {
        match table {
            Table::Local => &[
                Job::Greedy,
                Job::LocaleRounds(InnerRounds::Two),
                Job::LocaleRounds(InnerRounds::Full),
            ],
            Table::Multilevel => &[
                Job::Driver(Algorithm::Louvain),
                Job::Driver(Algorithm::Leiden),
                Job::Driver(Algorithm::Locale),
            ],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub dataset: String,
    pub table: Table,
    pub algorithm: &'static str,
    pub config: &'static str,
    pub nodes: Option<usize>,
    pub average_degree: Option<f64>,
    pub modularity: Option<f64>,
    pub seconds: Option<f64>,
    /// Locale multilevel time over Leiden multilevel time.
    pub time_ratio_to_leiden: Option<f64>,
    pub status: &'static str,
    pub note: String,
}

/// Runs one job and returns (modularity, seconds).
fn run_job(g: &Graph, job: Job, m: &Manifest) -> Result<(f64, f64)> {
    let start = Instant::now();
    let p = match job {
        Job::Greedy => {
            let opts = LocaleOptions {
                seed: m.seed,
                ..LocaleOptions::default().rounding()
            };
            greedy_local_move(g, &Partition::singletons(g.n()), &opts, None).0
        }
        Job::LocaleRounds(rounds) => {
            let opts = LocaleOptions {
                k: m.k,
                rounds: rounds.limit(),
                seed: m.seed,
                ..LocaleOptions::default()
            };
            let (e, _) = locale_embeddings(g, &Partition::singletons(g.n()), &opts);
            locale_rounding(g, e, &opts).0
        }
        Job::Driver(algorithm) => {
            let cfg = RunConfig {
                algorithm,
                k: m.k,
                inner_rounds: InnerRounds::Two,
                iterations: m.iterations,
                seed: m.seed,
                validated: false,
            };
            leiden_locale(g, &cfg)?.partition
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    Ok((modularity(g, &p)?, seconds))
}

fn resolve(manifest: &Path, entry: &DatasetEntry) -> PathBuf {
    match manifest.parent() {
        Some(dir) if entry.path.is_relative() => dir.join(&entry.path),
        _ => entry.path.clone(),
    }
}

/// Builds every row. Datasets load once and are shared read-only across
/// worker threads.
pub fn table(manifest_path: &Path, m: &Manifest, jobs: usize) -> Result<Vec<Row>> {
    let mut graphs: HashMap<String, std::result::Result<Arc<Graph>, String>> = HashMap::new();
    for entry in &m.datasets {
        let path = resolve(manifest_path, entry);
        let loaded = if path.is_file() {
            crate::load_graph(&path, entry.weighted)
                .map(Arc::new)
                .map_err(|e| format!("{e:#}"))
        } else {
            Err(format!("missing dataset file {}", path.display()))
        };
        graphs.insert(entry.name.clone(), loaded);
    }

    let work: Vec<(&DatasetEntry, Job)> = m
        .datasets
        .iter()
        .flat_map(|d| {
            m.tables
                .iter()
                .flat_map(move |&t| Job::jobs(t).iter().map(move |&j| (d, j)))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let mut rows: Vec<Row> = pool.install(|| {
        work.par_iter()
            .map(|&(entry, job)| {
                let (algorithm, config) = job.names();
                let mut row = Row {
                    dataset: entry.name.clone(),
                    table: job.table(),
                    algorithm,
                    config,
                    nodes: None,
                    average_degree: None,
                    modularity: None,
                    seconds: None,
                    time_ratio_to_leiden: None,
                    status: "ok",
                    note: String::new(),
                };
                match &graphs[&entry.name] {
                    Err(msg) => {
                        row.status = "skipped";
                        row.note = msg.clone();
                    }
                    Ok(g) => {
                        row.nodes = Some(g.n());
                        row.average_degree = Some(if g.n() > 0 {
                            2.0 * g.edge_count() as f64 / g.n() as f64
                        } else {
                            0.0
                        });
                        match run_job(g, job, m) {
                            Ok((q, s)) => {
                                row.modularity = Some(q);
                                row.seconds = Some(s);
                            }
                            Err(e) => {
                                row.status = "error";
                                row.note = format!("{e:#}");
                            }
                        }
                    }
                }
                row
            })
            .collect()
    });

    let leiden_seconds: HashMap<String, f64> = rows
        .iter()
        .filter(|r| r.table == Table::Multilevel && r.algorithm == "leiden")
        .filter_map(|r| Some((r.dataset.clone(), r.seconds?)))
        .collect();
    for row in &mut rows {
        if row.table == Table::Multilevel && row.algorithm == "locale" {
            if let (Some(s), Some(&base)) = (row.seconds, leiden_seconds.get(&row.dataset)) {
                row.time_ratio_to_leiden = (base > 0.0).then(|| s / base);
            }
        }
    }
    Ok(rows)
}

fn write_rows<W: Write>(rows: &[Row], format: Format, out: W) -> Result<()> {
    match format {
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn run(args: &BenchArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.manifest)
        .with_context(|| format!("cannot read {}", args.manifest.display()))?;
    let m = Manifest::parse(&text)
        .with_context(|| format!("invalid manifest {}", args.manifest.display()))?;
    let rows = table(&args.manifest, &m, args.jobs as usize)?;
    match &args.output {
        Some(path) => {
            let file = fs::File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))?;
            write_rows(&rows, args.format, io::BufWriter::new(file))?;
        }
        None => write_rows(&rows, args.format, io::stdout().lock())?,
    }
    let incomplete = rows.iter().filter(|r| r.status != "ok").count();
    if incomplete > 0 {
        eprintln!("{incomplete} row(s) skipped or failed");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}
