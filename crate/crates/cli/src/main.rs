use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use locale_cli::{bench, load_graph, report};
use locale_core::graph::modularity;
use locale_core::{
    brute_force_max_modularity, leiden_locale, Algorithm, Error, InnerRounds, Partition, RunConfig,
};

/// Community detection with Louvain, Leiden and Leiden-Locale.
#[derive(Parser, Debug)]
#[command(name = "locale", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Detect communities and write a partition file.
    Detect(DetectArgs),
    /// Print the modularity of a partition.
    Modularity(ModularityArgs),
    /// Exhaustive maximum modularity for small graphs.
    Oracle(OracleArgs),
    /// Run the datasets and configurations listed in a manifest.
    Bench(bench::BenchArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Edge list: one "u v" or "u v w" per line.
    #[arg(long)]
    input: PathBuf,
    /// Read the third column as an edge weight.
    #[arg(long)]
    weighted: bool,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum AlgoArg {
    Louvain,
    Leiden,
    Locale,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum RoundsArg {
    #[value(name = "2")]
    Two,
    Full,
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "locale")]
    algo: AlgoArg,
    /// Cardinality bound for Locale embeddings.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Length of each embedding phase.
    #[arg(long, value_enum, default_value = "2")]
    inner_rounds: RoundsArg,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    iterations: u64,
    /// Shuffle the node visiting order.
    #[arg(long)]
    seed: Option<u64>,
    /// Partition file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// JSON report file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Check the projected-gradient inequality on every update.
    #[arg(long, env = "LOCALE_VALIDATED")]
    validated: bool,
}

#[derive(Args, Debug)]
struct ModularityArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Partition file: "node_id community_id" per line.
    #[arg(long)]
    partition: PathBuf,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = locale_core::oracle::DEFAULT_MAX_N)]
    max_n: usize,
}

impl DetectArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            algorithm: match self.algo {
                AlgoArg::Louvain => Algorithm::Louvain,
                AlgoArg::Leiden => Algorithm::Leiden,
                AlgoArg::Locale => Algorithm::Locale,
            },
            k: self.k as usize,
            inner_rounds: match self.inner_rounds {
                RoundsArg::Two => InnerRounds::Two,
                RoundsArg::Full => InnerRounds::Full,
            },
            iterations: self.iterations as usize,
            seed: self.seed,
            validated: self.validated,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn detect(args: &DetectArgs) -> Result<()> {
    let g = load_graph(&args.input.input, args.input.weighted)?;
    let cfg = args.config();
    let result = leiden_locale(&g, &cfg)?;
    match &args.output {
        Some(path) => {
            let mut out = create(path)?;
            result.partition.write(&g, &mut out)?;
            out.flush()?;
        }
        None => result.partition.write(&g, io::stdout().lock())?,
    }
    if let Some(path) = &args.report {
        let report = report::Report::new(&args.input.input, args.input.weighted, &g, &cfg, &result);
        let mut out = create(path)?;
        serde_json::to_writer_pretty(&mut out, &report)?;
        writeln!(out)?;
        out.flush()?;
    }
    Ok(())
}

fn print_modularity(args: &ModularityArgs) -> Result<()> {
    let g = load_graph(&args.input.input, args.input.weighted)?;
    let path = &args.partition;
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let p = Partition::read(BufReader::new(file), &g)
        .with_context(|| format!("cannot read {}", path.display()))?;
    println!("{:.6}", modularity(&g, &p)?);
    Ok(())
}

fn oracle(args: &OracleArgs) -> Result<()> {
    let g = load_graph(&args.input.input, args.input.weighted)?;
    let (q, p) = match brute_force_max_modularity(&g, args.max_n) {
        Err(Error::TooLarge { n, cap }) => anyhow::bail!(
            "graph has {n} nodes, more than --max-n {cap}; the search visits every set partition, \
             so raise --max-n only slightly or use `detect` instead"
        ),
        other => other?,
    };
    println!("# maximum modularity {q:.6}");
    p.write(&g, io::stdout().lock())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let outcome = match &cli.command {
        Command::Detect(args) => detect(args).map(|()| ExitCode::SUCCESS),
        Command::Modularity(args) => print_modularity(args).map(|()| ExitCode::SUCCESS),
        Command::Oracle(args) => oracle(args).map(|()| ExitCode::SUCCESS),
        Command::Bench(args) => bench::run(args),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
