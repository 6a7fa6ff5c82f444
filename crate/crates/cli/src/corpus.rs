//! Corpus generation, transformation and benchmarking.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chorex_core::epp::epp;
use chorex_core::extraction::{extract, ExtractError, Strategy, StrategyKind};
use chorex_core::testgen::{fuzz, generate_projectable, unroll, FuzzParams, GenParams};
use chorex_core::{parse_network, Network, ProcessName};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{parse_err, read, write, CliError};

const MANIFEST: &str = "manifest.json";
/// Generated terms for the larger grids are deep enough to overflow default worker stacks.
const WORKER_STACK: usize = 64 << 20;

/// Configures the global rayon pool; call once before any parallel corpus work.
pub fn init_pool() {
    // Fails only if the pool already exists, in which case it is kept.
    let _ = rayon::ThreadPoolBuilder::new().stack_size(WORKER_STACK).build_global();
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    pub size: usize,
    pub processes: usize,
    pub ifs: usize,
    pub defs: usize,
}

impl Params {
    fn of_network(n: &Network) -> Self {
        Params {
            size: n.size(),
            processes: n.len(),
            ifs: n.processes.values().map(|t| t.conditionals()).sum(),
            defs: n.processes.values().map(|t| t.procedures.len()).sum(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Entry {
    pub test_id: String,
    /// Network file, relative to the manifest.
    pub network: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choreography: Option<String>,
    pub params: Params,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuzz: Option<(usize, usize)>,
    /// `extractable` or `unknown`.
    pub expected: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub entries: Vec<Entry>,
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.into(), source })
}

fn write_manifest(dir: &Path, m: &Manifest) -> Result<(), CliError> {
    write(&dir.join(MANIFEST), &(serde_json::to_string_pretty(m)? + "\n"))
}

/// Reads a corpus directory: its manifest when present, otherwise every `.sp` file.
fn load(dir: &Path) -> Result<Vec<(Entry, Network)>, CliError> {
    let manifest = dir.join(MANIFEST);
    let entries = if manifest.exists() {
        serde_json::from_str::<Manifest>(&read(&manifest)?)?.entries
    } else {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|source| CliError::Io { path: dir.into(), source })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "sp"))
            .collect();
        files.sort();
        files
            .into_iter()
            .map(|p| Entry {
                test_id: p.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
                network: p.file_name().unwrap_or_default().to_string_lossy().into_owned(),
                choreography: None,
                params: Params { size: 0, processes: 0, ifs: 0, defs: 0 },
                seed: 0,
                source: None,
                fuzz: None,
                expected: "unknown".into(),
            })
            .collect()
    };
    let with_manifest = manifest.exists();
    entries
        .into_iter()
        .map(|mut e| {
            let path = dir.join(&e.network);
            let net = parse_network(&read(&path)?).map_err(parse_err(&path))?;
            if !with_manifest {
                e.params = Params::of_network(&net);
            }
            Ok((e, net))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestSet {
    Size,
    Processes,
    Ifs,
    IfsProcedures,
    Procedures,
}

impl TestSet {
    const ALL: [TestSet; 5] =
        [TestSet::Size, TestSet::Processes, TestSet::Ifs, TestSet::IfsProcedures, TestSet::Procedures];

    /// Parameter points of the grid, each with a short label.
    fn points(self) -> Vec<(String, Params)> {
        let p = |size, processes, ifs, defs| Params { size, processes, ifs, defs };
        match self {
            TestSet::Size => (1..=42).map(|k| (format!("size-k{k:02}"), p(50 * k, 6, 0, 0))).collect(),
            TestSet::Processes => {
                (1..=20).map(|k| (format!("processes-k{k:02}"), p(500, 5 * k, 0, 0))).collect()
            }
            TestSet::Ifs => (1..=4).map(|k| (format!("ifs-k{k}"), p(50, 6, 10 * k, 0))).collect(),
            TestSet::IfsProcedures => (0..=5)
                .flat_map(|j| (0..=3).map(move |k| (format!("ifsprocs-j{j}k{k}"), p(200, 5, j, 5 * k))))
                .collect(),
            TestSet::Procedures => {
                (1..=15).map(|k| (format!("procedures-k{k:02}"), p(20, 5, 8, k))).collect()
            }
        }
    }
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    /// Parameter grids to generate; all of them when neither this nor --size is given.
    #[arg(long = "set", value_enum)]
    sets: Vec<TestSet>,
    /// Multiplies the number of tests per parameter point (10 at scale 1).
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Single custom parameter point instead of the grids.
    #[arg(long, requires_all = ["processes"])]
    size: Option<usize>,
    #[arg(long)]
    processes: Option<usize>,
    #[arg(long, default_value_t = 0)]
    ifs: usize,
    #[arg(long, default_value_t = 0)]
    defs: usize,
    /// Tests for a custom point.
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, env = "CHOREX_SEED", default_value_t = 0)]
    seed: u64,
    /// Skip the conditional-swapping pass that duplicates code into branches.
    #[arg(long)]
    efficient: bool,
}

pub fn cmd_gen(args: GenArgs) -> Result<u8, CliError> {
    if !(args.scale > 0.0) {
        return Err(CliError::Input("--scale must be positive".into()));
    }
    let mut specs: Vec<(String, Params)> = Vec::new();
    if let (Some(size), Some(processes)) = (args.size, args.processes) {
        let p = Params { size, processes, ifs: args.ifs, defs: args.defs };
        specs.extend((0..args.count).map(|i| (format!("custom-{i:03}"), p)));
    } else {
        let per_point = ((10.0 * args.scale).round() as usize).max(1);
        let sets = if args.sets.is_empty() { TestSet::ALL.to_vec() } else { args.sets.clone() };
        for set in sets {
            for (label, p) in set.points() {
                specs.extend((0..per_point).map(|i| (format!("{label}-{i:02}"), p)));
            }
        }
    }
    create_dir(&args.out)?;
    let generated: Vec<_> = specs
        .par_iter()
        .enumerate()
        .map(|(i, (id, p))| {
            let seed = args.seed.wrapping_add(i as u64);
            let gp = GenParams { size: p.size, processes: p.processes, ifs: p.ifs, defs: p.defs, seed };
            let result = generate_projectable(&gp, !args.efficient)
                .map_err(|e| e.to_string())
                .and_then(|c| epp(&c).map(|n| (c, n)).map_err(|e| e.to_string()));
            (id.clone(), *p, seed, result)
        })
        .collect();
    let mut entries = Vec::new();
    for (id, params, seed, result) in generated {
        match result {
            Ok((c, n)) => {
                write(&args.out.join(format!("{id}.cc")), &c.to_string())?;
                write(&args.out.join(format!("{id}.sp")), &n.to_string())?;
                entries.push(Entry {
                    test_id: id.clone(),
                    network: format!("{id}.sp"),
                    choreography: Some(format!("{id}.cc")),
                    params,
                    seed,
                    source: None,
                    fuzz: None,
                    expected: "extractable".into(),
                });
            }
            Err(e) => eprintln!("skipped {id}: {e}"),
        }
    }
    write_manifest(&args.out, &Manifest { kind: "gen".into(), entries: entries.clone() })?;
    println!("generated {} tests in {}", entries.len(), args.out.display());
    Ok(0)
}

fn parse_grid(text: &str) -> Result<Vec<(usize, usize)>, String> {
    text.split(',')
        .map(|pair| {
            let (d, s) = pair.split_once(':').ok_or_else(|| format!("expected d:s, got `{pair}`"))?;
            let d = d.trim().parse::<usize>().map_err(|e| e.to_string())?;
            let s = s.trim().parse::<usize>().map_err(|e| e.to_string())?;
            if d + s == 0 {
                return Err("d and s cannot both be 0".into());
            }
            Ok((d, s))
        })
        .collect()
}

#[derive(Args)]
pub struct FuzzArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated deletions:swaps settings.
    #[arg(long, default_value = "0:1,1:0,2:2", value_parser = parse_grid)]
    grid: std::vec::Vec<(usize, usize)>,
    #[arg(long, env = "CHOREX_SEED", default_value_t = 0)]
    seed: u64,
}

pub fn cmd_fuzz(args: FuzzArgs) -> Result<u8, CliError> {
    let corpus = load(&args.input)?;
    create_dir(&args.out)?;
    let mut entries = Vec::new();
    let mut changed = 0;
    for (i, (entry, net)) in corpus.iter().enumerate() {
        for (j, &(d, s)) in args.grid.iter().enumerate() {
            let seed = args.seed.wrapping_add((i * args.grid.len() + j) as u64);
            let (fuzzed, report) = fuzz(net, &FuzzParams { deletions: d, swaps: s, seed });
            changed += usize::from(report.is_some());
            let id = format!("{}-d{d}s{s}", entry.test_id);
            write(&args.out.join(format!("{id}.sp")), &fuzzed.to_string())?;
            entries.push(Entry {
                test_id: id.clone(),
                network: format!("{id}.sp"),
                choreography: None,
                params: entry.params,
                seed,
                source: Some(entry.test_id.clone()),
                fuzz: Some((d, s)),
                expected: "unknown".into(),
            });
        }
    }
    write_manifest(&args.out, &Manifest { kind: "fuzz".into(), entries: entries.clone() })?;
    println!("fuzzed {} networks into {} variants ({} changed)", corpus.len(), entries.len(), changed);
    Ok(0)
}

#[derive(Args)]
pub struct UnrollArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "CHOREX_SEED", default_value_t = 0)]
    seed: u64,
}

pub fn cmd_unroll(args: UnrollArgs) -> Result<u8, CliError> {
    let corpus = load(&args.input)?;
    create_dir(&args.out)?;
    let mut entries = Vec::new();
    let mut changed = 0;
    for (i, (entry, net)) in corpus.iter().enumerate() {
        let seed = args.seed.wrapping_add(i as u64);
        let (unrolled, report) = unroll(net, seed);
        changed += usize::from(report.is_some());
        let id = format!("{}-unrolled", entry.test_id);
        write(&args.out.join(format!("{id}.sp")), &unrolled.to_string())?;
        entries.push(Entry {
            test_id: id.clone(),
            network: format!("{id}.sp"),
            choreography: None,
            params: entry.params,
            seed,
            source: Some(entry.test_id.clone()),
            fuzz: None,
            expected: entry.expected.clone(),
        });
    }
    write_manifest(&args.out, &Manifest { kind: "unroll".into(), entries: entries.clone() })?;
    println!("unrolled {} networks ({} changed)", entries.len(), changed);
    Ok(0)
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long)]
    input: PathBuf,
    /// CSV output file.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated strategies, or `all`.
    #[arg(long, default_value = "all")]
    strategies: String,
    #[arg(long, value_delimiter = ',')]
    services: Vec<String>,
    #[arg(long, env = "CHOREX_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    no_parallel: bool,
    /// Count extractions containing deadlocks as unextractable in the summary.
    #[arg(long)]
    strict: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Row {
    test_id: String,
    size: usize,
    processes: usize,
    ifs: usize,
    defs: usize,
    strategy: String,
    time_ms: f64,
    nodes: usize,
    badloops: usize,
    verdict: &'static str,
}

fn strategies(text: &str) -> Result<Vec<StrategyKind>, CliError> {
    if text == "all" {
        return Ok(StrategyKind::ALL.to_vec());
    }
    text.split(',')
        .map(|s| s.trim().parse::<StrategyKind>().map_err(|e| CliError::Input(e.to_string())))
        .collect()
}

pub fn cmd_bench(args: BenchArgs) -> Result<u8, CliError> {
    let corpus = load(&args.input)?;
    let kinds = strategies(&args.strategies)?;
    let services: BTreeSet<ProcessName> =
        args.services.iter().filter(|s| !s.is_empty()).map(ProcessName::new).collect();
    let jobs: Vec<(&Entry, &Network, StrategyKind)> = corpus
        .iter()
        .flat_map(|(e, n)| kinds.iter().map(move |k| (e, n, *k)))
        .collect();
    let rows: Vec<Row> = jobs
        .par_iter()
        .map(|(entry, net, kind)| {
            let start = Instant::now();
            let strategy = Strategy { kind: *kind, seed: args.seed };
            let result = extract(net, &services, strategy, !args.no_parallel);
            let time_ms = start.elapsed().as_secs_f64() * 1e3;
            let (nodes, badloops, verdict) = match &result {
                Ok(ex) if ex.has_deadlocks() => (ex.stats.nodes_created, ex.stats.badloops, "deadlock"),
                Ok(ex) => (ex.stats.nodes_created, ex.stats.badloops, "ok"),
                Err(ExtractError::NoValidSeg(f)) => (f.stats.nodes_created, f.stats.badloops, "fail"),
                Err(_) => (0, 0, "invalid"),
            };
            Row {
                test_id: entry.test_id.clone(),
                size: entry.params.size,
                processes: entry.params.processes,
                ifs: entry.params.ifs,
                defs: entry.params.defs,
                strategy: kind.to_string(),
                time_ms,
                nodes,
                badloops,
                verdict,
            }
        })
        .collect();
    let mut csv = csv::Writer::from_path(&args.out)?;
    for row in &rows {
        csv.serialize(row)?;
    }
    csv.flush().map_err(|source| CliError::Io { path: args.out.clone(), source })?;
    println!("strategy,ok,deadlock,fail,invalid,unextractable");
    for kind in &kinds {
        let name = kind.to_string();
        let count = |v: &str| rows.iter().filter(|r| r.strategy == name && r.verdict == v).count();
        let (ok, dl, fail, invalid) = (count("ok"), count("deadlock"), count("fail"), count("invalid"));
        let unextractable = fail + invalid + if args.strict { dl } else { 0 };
        println!("{name},{ok},{dl},{fail},{invalid},{unextractable}");
    }
    Ok(0)
}
