//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero if
//! any criterion fails.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use chorex_core::epp::epp;
use chorex_core::equiv::{programs_bisimilar, Answer, SearchOrder, SimBudget, StateKeys, Verdict};
use chorex_core::extraction::{
    extract, loop_is_valid, node_bound_log2, ExtractError, Extraction, PathStackEntry, Strategy,
    StrategyKind,
};
use chorex_core::semantics::AnnotatedNetwork;
use chorex_core::testgen::{generate_projectable, unroll, GenParams};
use chorex_core::{
    parse_network, parse_program, Behaviour, Choreography, Network, ProcessName, ProcessTerm, Program,
};
use chorex_oracles::{loop_scan, small_network, valid_seg_exists, BruteForce};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Per-example wall-clock limit for the reference examples.
const EXAMPLE_LIMIT: Duration = Duration::from_secs(1);
/// Pair budget for the round-trip and unroll checks.
const ROUND_TRIP_PAIRS: usize = 100_000;
/// Time budget per bisimilarity check; generous, so that the pair budget is what binds.
const ROUND_TRIP_MILLIS: u64 = 20_000;
const ROUND_TRIP_CORPUS: usize = 200;
const MIN_FINISHED: f64 = 0.80;
const SUITE_LIMIT: Duration = Duration::from_secs(600);
const LOOP_QUERIES: usize = 1000;
const SMALL_NETWORKS: usize = 100;
const FUZZ_SCALE: f64 = 0.2;
const FUZZ_SEED: u64 = 1;
const FUZZ_MIN_CORPUS: usize = 100;
const UNROLL_CORPUS: usize = 100;
/// Per-check budget when comparing strategies; only a negative verdict fails the check.
const STRATEGY_PAIRS: usize = 20_000;
const STRATEGY_MILLIS: u64 = 3_000;
const PARALLEL_INSTANCES: usize = 5;
const PARALLEL_MAX_RATIO: f64 = 2.5;
const SEQUENTIAL_MIN_RATIO: f64 = 4.0;
const TIMING_REPEATS: usize = 5;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(data(name)).unwrap()
}

fn set(names: &[&str]) -> BTreeSet<ProcessName> {
    names.iter().map(|s| ProcessName::new(s)).collect()
}

fn budget() -> SimBudget {
    SimBudget { max_pairs: ROUND_TRIP_PAIRS, max_millis: ROUND_TRIP_MILLIS }
}

fn strategy_bisim(a: &Program, b: &Program) -> Answer {
    let budget = SimBudget { max_pairs: STRATEGY_PAIRS, max_millis: STRATEGY_MILLIS };
    programs_bisimilar(a, b, budget, SearchOrder::BreadthFirst, StateKeys::Projected).answer
}

fn bisim(a: &Program, b: &Program) -> Verdict {
    programs_bisimilar(a, b, budget(), SearchOrder::BreadthFirst, StateKeys::Projected)
}

/// Tracks the node-count bound over every extraction run in the suite.
#[derive(Default)]
struct Bound {
    runs: usize,
    violations: Vec<String>,
}

impl Bound {
    fn record(&mut self, what: &str, net: &Network, r: &Result<Extraction, ExtractError>) {
        match r {
            Ok(ex) => {
                for c in &ex.components {
                    self.runs += 1;
                    if !c.within_node_bound() {
                        self.violations.push(format!("{what}: {} nodes", c.stats.nodes_created));
                    }
                }
            }
            Err(ExtractError::NoValidSeg(f)) => {
                self.runs += 1;
                let sub = net.restrict(&f.processes.iter().cloned().collect());
                if (f.stats.nodes_created as f64).log2() > node_bound_log2(&sub) + 1e-9 {
                    self.violations.push(format!("{what}: {} nodes", f.stats.nodes_created));
                }
            }
            Err(_) => {}
        }
    }
}

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, n: usize, ok: bool, detail: String) {
        println!("{} criterion {n}: {detail}", if ok { "PASS" } else { "FAIL" });
        self.failed += usize::from(!ok);
    }
}

fn extract_with(
    net: &Network,
    services: &[&str],
    kind: StrategyKind,
    seed: u64,
    parallel: bool,
) -> Result<Extraction, ExtractError> {
    extract(net, &set(services), Strategy { kind, seed }, parallel)
}

fn reference_examples(bound: &mut Bound) -> (bool, String) {
    let cases: [(&str, &[&str]); 6] = [
        ("n1", &[]),
        ("n2", &[]),
        ("n3", &[]),
        ("signon", &[]),
        ("loop", &["r"]),
        ("starve", &[]),
    ];
    let mut problems = Vec::new();
    for (name, services) in cases {
        let net = parse_network(&read(&format!("{name}.sp"))).unwrap();
        let expected = parse_program(&read(&format!("{name}.cc"))).unwrap();
        let start = Instant::now();
        let r = extract_with(&net, services, StrategyKind::InteractionsFirst, 0, true);
        let elapsed = start.elapsed();
        bound.record(name, &net, &r);
        let Ok(ex) = r else {
            problems.push(format!("{name} did not extract"));
            continue;
        };
        let v = bisim(&expected, &ex.program);
        if !v.is_yes() {
            problems.push(format!("{name}: verdict {:?}", v.answer));
        }
        if elapsed > EXAMPLE_LIMIT {
            problems.push(format!("{name}: {elapsed:?}"));
        }
        if name == "n3" && ex.program.to_string().matches("deadlock").count() != 2 {
            problems.push("n3 does not have exactly two deadlock terms".into());
        }
    }
    // The two pairs are only forced into one loop when extracted as a single component.
    let net = parse_network(&read("starve.sp")).unwrap();
    let r = extract_with(&net, &[], StrategyKind::InteractionsFirst, 0, false);
    bound.record("starve sequential", &net, &r);
    match r {
        Ok(ex) => {
            if ex.stats.badloops == 0 {
                problems.push("starvation self-loop was not rejected".into());
            }
            let expected = parse_program(&read("starve.cc")).unwrap();
            if !bisim(&expected, &ex.program).is_yes() {
                problems.push("sequential starvation result differs".into());
            }
        }
        Err(e) => problems.push(format!("starve sequential: {e}")),
    }
    let net = parse_network(&read("livelock.sp")).unwrap();
    let r = extract_with(&net, &[], StrategyKind::InteractionsFirst, 0, true);
    bound.record("livelock", &net, &r);
    if !matches!(r, Err(ExtractError::NoValidSeg(_))) {
        problems.push("livelock extracted".into());
    }
    if problems.is_empty() {
        (true, "7 reference examples bisimilar to the expected results, each under 1 s".into())
    } else {
        (false, problems.join("; "))
    }
}

fn corpus_params(seed: u64, min_defs: usize) -> GenParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = rng.gen_range(1..=50);
    GenParams {
        size,
        processes: rng.gen_range(2..=6),
        ifs: rng.gen_range(0..=size.min(10)),
        defs: rng.gen_range(min_defs..=3),
        seed,
    }
}

/// Projectable choreographies with their projections.
fn corpus(n: usize, first_seed: u64, min_defs: usize) -> Vec<(Choreography, Network)> {
    let mut out = Vec::new();
    let mut seed = first_seed;
    while out.len() < n {
        let p = corpus_params(seed, min_defs);
        seed += 1;
        let Ok(c) = generate_projectable(&p, true) else { continue };
        let net = epp(&c).expect("amended choreographies project");
        out.push((c, net));
    }
    out
}

fn round_trip(corpus: &[(Choreography, Network)], bound: &mut Bound) -> (bool, String) {
    let start = Instant::now();
    let (mut extracted, mut yes, mut no, mut exhausted) = (0, 0, 0, 0);
    for (i, (c, net)) in corpus.iter().enumerate() {
        let r = extract_with(net, &[], StrategyKind::InteractionsFirst, i as u64, true);
        bound.record("round trip", net, &r);
        let Ok(ex) = r else { continue };
        if ex.has_deadlocks() {
            continue;
        }
        extracted += 1;
        match bisim(&Program::single(c.clone()), &ex.program).answer {
            Answer::Yes => yes += 1,
            Answer::No => no += 1,
            Answer::Exhausted => exhausted += 1,
        }
    }
    let elapsed = start.elapsed();
    let n = corpus.len();
    let finished = (yes + no) as f64 / n as f64;
    let ok = extracted == n && no == 0 && finished >= MIN_FINISHED && elapsed < SUITE_LIMIT;
    let detail = format!(
        "{extracted}/{n} extracted, {yes} bisimilar, {no} not bisimilar, {exhausted} exhausted \
         ({:.1}% finished), {:.1} s",
        finished * 100.0,
        elapsed.as_secs_f64()
    );
    (ok, detail)
}

fn loop_oracle() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut disagreements = 0;
    for _ in 0..LOOP_QUERIES {
        let len = rng.gen_range(1..=24);
        let density = rng.gen_range(0.0..0.5);
        let whites: Vec<bool> = (0..len).map(|_| rng.gen_bool(density)).collect();
        let mut entries = Vec::with_capacity(len);
        let mut below = 0;
        for (i, w) in whites.iter().enumerate() {
            entries.push(PathStackEntry { node: i, white_below: below });
            below += usize::from(*w);
        }
        let target = rng.gen_range(0..len);
        let fast = loop_is_valid(&entries[target], &entries[len - 1], whites[len - 1]);
        disagreements += usize::from(fast != loop_scan(&whites, target));
    }
    (disagreements == 0, format!("{disagreements} disagreements over {LOOP_QUERIES} queries"))
}

fn brute_force(bound: &mut Bound) -> (bool, String) {
    let (mut agree, mut disagree, mut unknown, mut none) = (0, 0, 0, 0);
    for seed in 0..SMALL_NETWORKS as u64 {
        let net = small_network(seed, 3, 8);
        let root = AnnotatedNetwork::initial(net.clone(), &BTreeSet::new());
        let oracle = valid_seg_exists(&root, 1_000_000);
        let r = extract_with(&net, &[], StrategyKind::InteractionsFirst, seed, false);
        bound.record("brute force", &net, &r);
        let engine = match r {
            Ok(_) => true,
            Err(ExtractError::NoValidSeg(_)) => false,
            Err(e) => panic!("sample network rejected: {e}"),
        };
        match oracle {
            BruteForce::Unknown => unknown += 1,
            BruteForce::Exists if engine => agree += 1,
            BruteForce::None if !engine => {
                agree += 1;
                none += 1;
            }
            _ => disagree += 1,
        }
    }
    (
        disagree == 0 && unknown == 0,
        format!(
            "{agree} agree ({none} without a valid graph), {disagree} disagree, {unknown} undecided"
        ),
    )
}

/// Fuzzes a desk-scale copy of the generator's parameter grids through the CLI, the way the
/// original evaluation fuzzed its generated corpus, and counts unextractable variants per setting.
fn fuzzer() -> (bool, String) {
    let bin = env!("CARGO_BIN_EXE_chorex");
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).display().to_string();
    let seed = FUZZ_SEED.to_string();
    let scale = FUZZ_SCALE.to_string();
    run(bin, &["gen", "--out", &d("gen"), "--scale", &scale, "--seed", &seed]);
    run(bin, &["fuzz", "--input", &d("gen"), "--out", &d("fuzz"), "--seed", &seed]);
    let (_, code) = run(
        bin,
        &["bench", "--input", &d("fuzz"), "--out", &d("bench.csv"), "--strategies", "interactions-first", "--strict"],
    );
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(d("bench.csv")).unwrap();
    let settings = [("d1s0", 0.95, 1.0), ("d2s2", 1.0, 1.0), ("d0s1", 0.30, 0.60)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (suffix, lo, hi) in settings {
        let verdicts: Vec<&str> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').collect::<Vec<_>>())
            .filter(|cols| cols[0].ends_with(suffix))
            .map(|cols| cols[9])
            .collect();
        let bad = verdicts.iter().filter(|v| **v != "ok").count();
        let frac = bad as f64 / verdicts.len() as f64;
        ok &= verdicts.len() >= FUZZ_MIN_CORPUS && frac >= lo && frac <= hi;
        parts.push(format!("{suffix}: {bad}/{} ({:.1}%) unextractable", verdicts.len(), frac * 100.0));
    }
    (ok, parts.join(", "))
}

fn unroller(bound: &mut Bound) -> (bool, String) {
    let base = corpus(UNROLL_CORPUS * 2, 20_000, 1);
    let (mut changed, mut extracted, mut yes, mut no, mut exhausted) = (0, 0, 0, 0, 0);
    for (i, (_, net)) in base.iter().enumerate() {
        if changed == UNROLL_CORPUS {
            break;
        }
        let (unrolled, report) = unroll(net, i as u64);
        if report.is_none() {
            continue;
        }
        changed += 1;
        let original = extract_with(net, &[], StrategyKind::InteractionsFirst, 0, true);
        let r = extract_with(&unrolled, &[], StrategyKind::InteractionsFirst, 0, true);
        bound.record("unroll", &unrolled, &r);
        let (Ok(original), Ok(ex)) = (original, r) else { continue };
        if ex.has_deadlocks() {
            continue;
        }
        extracted += 1;
        match bisim(&original.program, &ex.program).answer {
            Answer::Yes => yes += 1,
            Answer::No => no += 1,
            Answer::Exhausted => exhausted += 1,
        }
    }
    (
        changed == UNROLL_CORPUS && extracted == changed && no == 0,
        format!(
            "{extracted}/{changed} unrolled networks extracted; {yes} bisimilar, {no} not, {exhausted} exhausted"
        ),
    )
}

fn rename(b: &Behaviour, suffix: &str) -> Behaviour {
    let p = |q: &ProcessName| ProcessName::new(format!("{q}{suffix}"));
    match b {
        Behaviour::Nil | Behaviour::Call(_) => b.clone(),
        Behaviour::Send { to, expr, cont } => Behaviour::send(p(to), expr.clone(), rename(cont, suffix)),
        Behaviour::Receive { from, var, cont } => {
            Behaviour::receive(p(from), var.clone(), rename(cont, suffix))
        }
        Behaviour::Select { to, label, cont } => {
            Behaviour::select(p(to), label.clone(), rename(cont, suffix))
        }
        Behaviour::Offer { from, branches } => {
            Behaviour::offer(p(from), branches.iter().map(|(l, c)| (l.clone(), rename(c, suffix))))
                .unwrap()
        }
        Behaviour::Cond { expr, then, els } => {
            Behaviour::cond(expr.clone(), rename(then, suffix), rename(els, suffix))
        }
    }
}

/// Two disjoint copies of `n`.
fn duplicate(n: &Network) -> Network {
    let mut processes = n.processes.clone();
    for (name, t) in &n.processes {
        let procedures = t.procedures.iter().map(|(x, b)| (x.clone(), rename(b, "2").into())).collect();
        let term = ProcessTerm::new(procedures, rename(&t.main, "2")).unwrap();
        processes.insert(ProcessName::new(format!("{name}2")), term);
    }
    Network::new(processes).unwrap()
}

fn median_ms(net: &Network, parallel: bool, bound: &mut Bound) -> f64 {
    let mut times: Vec<f64> = (0..TIMING_REPEATS)
        .map(|_| {
            let start = Instant::now();
            let r = extract_with(net, &[], StrategyKind::InteractionsFirst, 0, parallel);
            let t = start.elapsed().as_secs_f64() * 1e3;
            bound.record("parallel", net, &r);
            assert!(r.is_ok());
            t
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[times.len() / 2]
}

fn parallelisation(bound: &mut Bound) -> (bool, String) {
    let mut bases = Vec::new();
    let mut seed = 30_000;
    while bases.len() < PARALLEL_INSTANCES {
        let p = GenParams { size: 120, processes: 5, ifs: 8, defs: 0, seed };
        seed += 1;
        let Ok(c) = generate_projectable(&p, false) else { continue };
        let net = epp(&c).unwrap();
        if extract_with(&net, &[], StrategyKind::InteractionsFirst, 0, true).is_ok() {
            bases.push(net);
        }
    }
    let mut worst_parallel: f64 = 0.0;
    let mut best_sequential: f64 = 0.0;
    let mut rows = Vec::new();
    for base in &bases {
        let double = duplicate(base);
        let single = median_ms(base, true, bound);
        let par = median_ms(&double, true, bound) / single;
        let seq = median_ms(&double, false, bound) / single;
        worst_parallel = worst_parallel.max(par);
        best_sequential = best_sequential.max(seq);
        rows.push(format!("{single:.1}ms x{par:.2}/x{seq:.1}"));
    }
    (
        worst_parallel <= PARALLEL_MAX_RATIO && best_sequential >= SEQUENTIAL_MIN_RATIO,
        format!(
            "max split ratio {worst_parallel:.2}, max sequential ratio {best_sequential:.1} [{}]",
            rows.join(", ")
        ),
    )
}

fn run(bin: &str, args: &[&str]) -> (Vec<u8>, i32) {
    let out = Command::new(bin).args(args).env_remove("CHOREX_SEED").output().unwrap();
    (out.stdout, out.status.code().unwrap_or(-1))
}

/// Output files compared between runs; timings are dropped from the CSV.
fn snapshot(dir: &Path) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for entry in walk(dir) {
        let mut text = std::fs::read_to_string(&entry).unwrap();
        if entry.extension().is_some_and(|e| e == "csv") {
            text = text
                .lines()
                .map(|l| {
                    let mut cols: Vec<&str> = l.split(',').collect();
                    cols.remove(6);
                    cols.join(",")
                })
                .collect::<Vec<_>>()
                .join("\n");
        }
        if entry.to_string_lossy().ends_with(".stats.json") {
            text = text.lines().filter(|l| !l.contains("wallMillis")).collect();
        }
        out.push((entry.strip_prefix(dir).unwrap().display().to_string(), text));
    }
    out
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

fn session(bin: &str, dir: &Path) -> Vec<(Vec<u8>, i32)> {
    let d = |name: &str| dir.join(name).display().to_string();
    let f = |name: &str| data(name).display().to_string();
    let mut outs = Vec::new();
    for kind in StrategyKind::ALL {
        for file in ["n3.sp", "signon.sp", "starve.sp", "livelock.sp"] {
            let name = kind.to_string();
            outs.push(run(
                bin,
                &[
                    "extract",
                    &f(file),
                    "--strategy",
                    &name,
                    "--seed",
                    "7",
                    "--dot",
                    &d(&format!("{name}-{file}.dot")),
                    "--stats",
                    &d(&format!("{name}-{file}.stats.json")),
                ],
            ));
        }
    }
    outs.push(run(bin, &["project", &f("signon.cc")]));
    outs.push(run(bin, &["project", &f("unprojectable.cc")]));
    outs.push(run(bin, &["equiv", &f("signon.cc"), &f("signon.cc")]));
    outs.push(run(bin, &["equiv", &f("starve.cc"), &f("n1.cc")]));
    outs.push(run(bin, &["check", &f("loop.sp")]));
    outs.push(run(bin, &["gen", "--out", &d("gen"), "--size", "30", "--processes", "4", "--ifs", "3", "--defs", "2", "--count", "6", "--seed", "5"]));
    outs.push(run(bin, &["gen", "--out", &d("grid"), "--set", "ifs", "--scale", "0.1", "--seed", "5"]));
    outs.push(run(bin, &["fuzz", "--input", &d("gen"), "--out", &d("fuzz"), "--seed", "5"]));
    outs.push(run(bin, &["unroll", "--input", &d("gen"), "--out", &d("unroll"), "--seed", "5"]));
    outs.push(run(bin, &["bench", "--input", &d("fuzz"), "--out", &d("bench.csv"), "--strict"]));
    // Commands echo their output directory, which differs between sessions.
    let root = dir.display().to_string();
    outs.into_iter()
        .map(|(stdout, code)| (String::from_utf8_lossy(&stdout).replace(&root, "<dir>").into_bytes(), code))
        .collect()
}

fn determinism() -> (bool, String) {
    let bin = env!("CARGO_BIN_EXE_chorex");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = session(bin, a.path());
    let second = session(bin, b.path());
    let same_stdout = first == second;
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    let same_files = sa == sb;
    let mut detail = format!(
        "{} command runs, stdout identical: {same_stdout}; {} output files identical: {same_files}",
        first.len(),
        sa.len()
    );
    if let Some(i) = (0..first.len()).find(|&i| first[i] != second[i]) {
        detail += &format!(" (first stdout difference in command {i})");
    }
    if let Some(((name, _), _)) = sa.iter().zip(&sb).find(|(x, y)| x != y) {
        detail += &format!(" (first file difference: {name})");
    }
    (same_stdout && same_files, detail)
}

/// Every strategy must agree on extractability, and the extracted programs must be bisimilar.
/// Bisimilarity is an equivalence, so each program is compared against the first strategy's.
fn strategies(corpus: &[(Choreography, Network)], bound: &mut Bound) -> (bool, String) {
    let start = Instant::now();
    let runs: Vec<Vec<Result<Extraction, ExtractError>>> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, (_, net))| {
            StrategyKind::ALL.iter().map(|&k| extract_with(net, &[], k, i as u64, true)).collect()
        })
        .collect();
    for ((_, net), results) in corpus.iter().zip(&runs) {
        for r in results {
            bound.record("strategies", net, r);
        }
    }
    let verdicts: Vec<Option<Vec<Answer>>> = runs
        .par_iter()
        .map(|results| {
            let oks: Vec<_> = results.iter().map(|r| r.is_ok()).collect();
            if oks.iter().any(|o| *o != oks[0]) {
                return None;
            }
            let programs: Vec<_> = results.iter().filter_map(|r| r.as_ref().ok()).map(|e| &e.program).collect();
            let Some((first, rest)) = programs.split_first() else { return Some(Vec::new()) };
            Some(
                rest.iter()
                    .map(|b| if *first == *b { Answer::Yes } else { strategy_bisim(first, b) })
                    .collect(),
            )
        })
        .collect();
    let extractability = verdicts.iter().filter(|v| v.is_none()).count();
    let answers: Vec<Answer> = verdicts.into_iter().flatten().flatten().collect();
    let count = |a: Answer| answers.iter().filter(|x| **x == a).count();
    let (yes, no, exhausted) = (count(Answer::Yes), count(Answer::No), count(Answer::Exhausted));
    (
        extractability == 0 && no == 0,
        format!(
            "{extractability} extractability disagreements; {yes} pairs bisimilar, {no} not, {exhausted} exhausted, {:.1} s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn main() {
    let mut report = Report { failed: 0 };
    let mut bound = Bound::default();

    let (ok, detail) = reference_examples(&mut bound);
    report.line(1, ok, detail);

    let round = corpus(ROUND_TRIP_CORPUS, 0, 0);
    let (ok, detail) = round_trip(&round, &mut bound);
    report.line(2, ok, detail);

    let (ok, detail) = loop_oracle();
    report.line(3, ok, detail);

    let (ok, detail) = brute_force(&mut bound);
    report.line(4, ok, detail);

    let (ok, detail) = fuzzer();
    report.line(5, ok, detail);

    let (ok, detail) = unroller(&mut bound);
    report.line(6, ok, detail);

    let (ok, detail) = parallelisation(&mut bound);
    report.line(7, ok, detail);

    let (ok, detail) = strategies(&round, &mut bound);
    let strategies_line = (ok, detail);

    let (ok, detail) = determinism();
    let determinism_line = (ok, detail);

    report.line(
        8,
        bound.violations.is_empty(),
        format!(
            "{} runs checked, {} over the bound {}",
            bound.runs,
            bound.violations.len(),
            bound.violations.iter().take(3).cloned().collect::<Vec<_>>().join("; ")
        ),
    );
    report.line(9, determinism_line.0, determinism_line.1);
    report.line(10, strategies_line.0, strategies_line.1);

    if report.failed > 0 {
        println!("{} criteria failed", report.failed);
        std::process::exit(1);
    }
}
