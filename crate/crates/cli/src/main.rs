mod corpus;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chorex_core::epp::{epp_with, EppError};
use chorex_core::equiv::{programs_bisimilar, Answer, SearchOrder, SimBudget, StateKeys};
use chorex_core::extraction::{extract, seg_to_dot, ExtractError, Strategy, StrategyKind};
use chorex_core::parser::ParseError;
use chorex_core::{checks::check_all, parse_choreography, parse_network, parse_program, ProcessName};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

#[derive(Parser)]
#[command(name = "chorex", version, about = "Choreography extraction and projection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract a choreography from a network file.
    Extract(ExtractArgs),
    /// Project a choreography file to a network.
    Project {
        file: PathBuf,
        /// Comma-separated processes to include even if the choreography never mentions them.
        #[arg(long, value_delimiter = ',')]
        processes: Vec<String>,
    },
    /// Check two choreographies (or programs) for bisimilarity.
    Equiv(EquivArgs),
    /// Run the well-formedness and guardedness checks on a network file.
    Check {
        file: PathBuf,
    },
    /// Generate a corpus of random projectable choreographies and their projections.
    Gen(corpus::GenArgs),
    /// Derive fuzzed variants of every network in a corpus.
    Fuzz(corpus::FuzzArgs),
    /// Derive unrolled variants of every network in a corpus.
    Unroll(corpus::UnrollArgs),
    /// Extract every network of a corpus under several strategies and write a CSV.
    Bench(corpus::BenchArgs),
}

#[derive(Args)]
struct ExtractArgs {
    file: PathBuf,
    #[arg(long, default_value = "interactions-first")]
    strategy: StrategyKind,
    /// Comma-separated service processes.
    #[arg(long, value_delimiter = ',')]
    services: Vec<String>,
    #[arg(long, env = "CHOREX_SEED", default_value_t = 0)]
    seed: u64,
    /// Extract the whole network as one component.
    #[arg(long)]
    no_parallel: bool,
    /// Write the symbolic execution graph(s) in DOT format.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write run statistics as JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Treat deadlocked leaves as failure.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct EquivArgs {
    a: PathBuf,
    b: PathBuf,
    /// Maximum number of explored pairs.
    #[arg(long, default_value_t = 200_000)]
    budget: usize,
    #[arg(long, default_value_t = 10_000)]
    max_millis: u64,
    #[arg(long, value_enum, default_value_t = Order::Bfs)]
    order: Order,
    #[arg(long, value_enum, default_value_t = Keys::Projected)]
    keys: Keys,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Bfs,
    Dfs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Keys {
    Projected,
    Structural,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{source}")]
    Parse {
        path: PathBuf,
        source: ParseError,
    },
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

pub fn parse_err(path: &Path) -> impl FnOnce(ParseError) -> CliError + '_ {
    move |source| CliError::Parse { path: path.into(), source }
}

/// Statistics record written by `extract --stats`.
#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct RunStats {
    wall_millis: f64,
    nodes_created: usize,
    nodes_deleted: usize,
    badloops: usize,
    components: usize,
    strategy: String,
    seed: u64,
}

const EXIT_INPUT: u8 = 2;

fn cmd_extract(args: ExtractArgs) -> Result<u8, CliError> {
    let net = parse_network(&read(&args.file)?).map_err(parse_err(&args.file))?;
    let services: BTreeSet<ProcessName> =
        args.services.iter().filter(|s| !s.is_empty()).map(ProcessName::new).collect();
    let strategy = Strategy { kind: args.strategy, seed: args.seed };
    let result = extract(&net, &services, strategy, !args.no_parallel);
    let (code, stats, dot) = match result {
        Ok(ex) => {
            print!("{}", ex.program);
            let deadlocks = ex.deadlocks();
            for d in &deadlocks {
                eprintln!("warning: deadlock in component {} at choice path {}", d.component, d.path);
                for (p, term) in &d.stuck {
                    eprintln!("  {p}: {term}");
                }
            }
            let dot: String = ex
                .components
                .iter()
                .enumerate()
                .map(|(i, c)| seg_to_dot(&c.seg, &format!("component{i}")))
                .collect();
            let code = if args.strict && !deadlocks.is_empty() { 1 } else { 0 };
            (code, (ex.stats, ex.components.len()), Some(dot))
        }
        Err(ExtractError::NoValidSeg(f)) => {
            eprintln!(
                "error: no valid graph for component {} ({}): {}",
                f.component,
                f.processes.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(", "),
                f.reason
            );
            (1, (f.stats, 0), None)
        }
        Err(ExtractError::Checks(report)) => {
            for v in &report.violations {
                eprintln!("error: {}", v.description);
            }
            return Ok(EXIT_INPUT);
        }
        Err(e) => return Err(CliError::Input(e.to_string())),
    };
    if let (Some(path), Some(dot)) = (&args.dot, dot) {
        write(path, &dot)?;
    }
    if let Some(path) = &args.stats {
        let (s, components) = stats;
        let record = RunStats {
            wall_millis: s.elapsed_ms,
            nodes_created: s.nodes_created,
            nodes_deleted: s.nodes_deleted,
            badloops: s.badloops,
            components,
            strategy: args.strategy.to_string(),
            seed: args.seed,
        };
        write(path, &(serde_json::to_string_pretty(&record)? + "\n"))?;
    }
    Ok(code)
}

fn cmd_project(file: &Path, processes: &[String]) -> Result<u8, CliError> {
    let c = parse_choreography(&read(file)?).map_err(parse_err(file))?;
    let declared: BTreeSet<ProcessName> =
        processes.iter().filter(|s| !s.is_empty()).map(ProcessName::new).collect();
    match epp_with(&c, &declared) {
        Ok(net) => {
            print!("{net}");
            Ok(0)
        }
        // Nothing to project: the empty network.
        Err(EppError::NoProcesses) => Ok(0),
        Err(e) => {
            eprintln!("error: {e}");
            Ok(1)
        }
    }
}

fn cmd_equiv(args: EquivArgs) -> Result<u8, CliError> {
    let a = parse_program(&read(&args.a)?).map_err(parse_err(&args.a))?;
    let b = parse_program(&read(&args.b)?).map_err(parse_err(&args.b))?;
    let budget = SimBudget { max_pairs: args.budget, max_millis: args.max_millis };
    let order = match args.order {
        Order::Bfs => SearchOrder::BreadthFirst,
        Order::Dfs => SearchOrder::DepthFirst,
    };
    let keys = match args.keys {
        Keys::Projected => StateKeys::Projected,
        Keys::Structural => StateKeys::Structural,
    };
    let v = programs_bisimilar(&a, &b, budget, order, keys);
    println!("{}", serde_json::to_string(&v)?);
    Ok(match v.answer {
        Answer::Yes => 0,
        Answer::No => 1,
        Answer::Exhausted => 3,
    })
}

fn cmd_check(file: &Path) -> Result<u8, CliError> {
    let net = chorex_core::parse_network_unvalidated(&read(file)?).map_err(parse_err(file))?;
    let report = check_all(&net);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.ok { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    corpus::init_pool();
    let result = match cli.command {
        Command::Extract(a) => cmd_extract(a),
        Command::Project { file, processes } => cmd_project(&file, &processes),
        Command::Equiv(a) => cmd_equiv(a),
        Command::Check { file } => cmd_check(&file),
        Command::Gen(a) => corpus::cmd_gen(a),
        Command::Fuzz(a) => corpus::cmd_fuzz(a),
        Command::Unroll(a) => corpus::cmd_unroll(a),
        Command::Bench(a) => corpus::cmd_bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
