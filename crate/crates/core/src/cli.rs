//! Command-line front end: `project`, `gta`, `check` and `bench`.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on usage,
//! parse or parameter errors.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::gta_project;
use crate::etp::{complexity_bound, project_with, ProjectionResult};
use crate::exec::{self, Execution};
use crate::oracle::{brute_force_project_with, DEFAULT_ENUMERATION_LIMIT};
use crate::signal::Signal;
use crate::topology::TreeTopology;

/// Relative tolerance when comparing energies from different algorithms.
pub const ENERGY_RTOL: f64 = 1e-9;
/// Magnitude bump per node id used to make optimal supports unique.
pub const PERTURBATION_EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Verification(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "treeproj",
    version,
    about = "Exact tree projection for wavelet coefficient trees"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact projection of a coefficient file.
    Project(ProjectArgs),
    /// Greedy tree approximation of a coefficient file.
    Gta(ProjectArgs),
    /// Compare the exact projection against brute-force enumeration.
    Check(CheckArgs),
    /// Operation counts and timings over a parameter sweep, as CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Coefficient file: one number per line, '#' comments allowed.
    #[arg(long)]
    pub input: PathBuf,
    /// Tree order.
    #[arg(long)]
    pub d: usize,
    /// Target cardinality.
    #[arg(long)]
    pub k: usize,
    /// Write the result document here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    pub input: Option<PathBuf>,
    /// Seed for a standard Gaussian signal (requires --J).
    #[arg(long, requires = "levels")]
    pub random: Option<u64>,
    #[arg(long)]
    pub d: usize,
    #[arg(long = "J", id = "levels")]
    pub levels: Option<u32>,
    /// Single cardinality.
    #[arg(long, conflicts_with = "k_list")]
    pub k: Option<usize>,
    /// Cardinalities, e.g. "1..8" or "2,4,6". Defaults to 1..=min(N, 12).
    #[arg(long)]
    pub k_list: Option<String>,
    /// Refuse oracle runs with more rooted trees than this.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_LIMIT)]
    pub max_enum: u128,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Tree orders, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub d: Vec<usize>,
    /// Levels, e.g. "10", "8..12" or "8,10".
    #[arg(long = "J")]
    pub levels: String,
    /// Cardinalities: integers or the rules sqrt, quarter, full.
    #[arg(long)]
    pub k_list: String,
    #[arg(long, default_value_t = 0)]
    pub random: u64,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Run cells concurrently (each projection then runs single-threaded).
    #[arg(long)]
    pub parallel_cells: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpsDocument {
    pub additions: u64,
    pub comparisons: u64,
    pub pass2_comparisons: u64,
    pub bound: u64,
}

/// Result document written by `project` and `gta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub method: String,
    pub d: usize,
    #[serde(rename = "J")]
    pub levels: u32,
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    pub support: Vec<usize>,
    pub energy: f64,
    pub projection: Vec<f64>,
    pub ops: OpsDocument,
}

impl ResultDocument {
    pub fn new(
        method: &str,
        t: &TreeTopology,
        k: usize,
        result: ProjectionResult,
    ) -> crate::Result<Self> {
        Ok(Self {
            method: method.to_owned(),
            d: t.order(),
            levels: t.levels(),
            n: t.len(),
            k,
            support: result.support.into(),
            energy: result.energy,
            projection: result.projection,
            ops: OpsDocument {
                additions: result.ops.additions,
                comparisons: result.ops.comparisons,
                pass2_comparisons: result.ops.pass2_comparisons,
                bound: complexity_bound(t.order(), t.len(), k)?,
            },
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }
}

/// One row of `bench` output.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub d: usize,
    pub levels: u32,
    pub n: usize,
    pub k: usize,
    pub rep: usize,
    pub seed: u64,
    pub additions: u64,
    pub comparisons: u64,
    pub pass2_comparisons: u64,
    pub bound: u64,
    pub wall_time: f64,
}

impl BenchRecord {
    pub const HEADER: &'static str =
        "d,J,N,k,rep,seed,additions,comparisons,pass2_comparisons,total,bound,wall_time";

    pub fn total(&self) -> u64 {
        self.additions + self.comparisons + self.pass2_comparisons
    }

    pub fn within_bound(&self) -> bool {
        self.total() <= self.bound
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{:.9}",
            self.d,
            self.levels,
            self.n,
            self.k,
            self.rep,
            self.seed,
            self.additions,
            self.comparisons,
            self.pass2_comparisons,
            self.total(),
            self.bound,
            self.wall_time
        )
    }
}

/// Parses one coefficient per line, skipping blank lines and `#` comments.
pub fn parse_coefficients(text: &str) -> CliResult<Vec<f64>> {
    text.lines()
        .enumerate()
        .map(|(no, line)| (no + 1, line.trim()))
        .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'))
        .map(|(no, line)| {
            line.parse::<f64>().map_err(|_| {
                CliError::Usage(format!("line {no}: cannot parse {line:?} as a number"))
            })
        })
        .collect()
}

fn read_signal(path: &Path, d: usize) -> CliResult<(TreeTopology, Signal)> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let values = parse_coefficients(&text)?;
    let t = TreeTopology::from_len(d, values.len())?;
    Ok((t, Signal::new(values)?))
}

/// Integer list syntax: `a`, `a..b` (inclusive) or comma-separated mixes.
pub fn parse_int_list(spec: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::Usage(format!("invalid integer list {spec:?}"));
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim) {
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: usize = lo.trim().parse().map_err(|_| bad())?;
            let hi: usize = hi
                .trim()
                .trim_start_matches('=')
                .parse()
                .map_err(|_| bad())?;
            if lo > hi {
                return Err(bad());
            }
            out.extend(lo..=hi);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KRule {
    Fixed(usize),
    Sqrt,
    Quarter,
    Full,
}

impl KRule {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            KRule::Fixed(k) => k,
            KRule::Sqrt => (1..=n).find(|r| r * r >= n).unwrap_or(n),
            KRule::Quarter => n.div_ceil(4),
            KRule::Full => n,
        }
    }
}

pub fn parse_k_rules(spec: &str) -> CliResult<Vec<KRule>> {
    spec.split(',')
        .map(str::trim)
        .map(|tok| match tok {
            "sqrt" => Ok(KRule::Sqrt),
            "quarter" => Ok(KRule::Quarter),
            "full" => Ok(KRule::Full),
            _ => tok
                .parse()
                .map(KRule::Fixed)
                .map_err(|_| CliError::Usage(format!("invalid k rule {tok:?}"))),
        })
        .collect()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed for one bench cell, derived from the base seed and cell coordinates.
pub fn cell_seed(seed: u64, d: usize, levels: u32, k: usize, rep: usize) -> u64 {
    [d as u64, levels as u64, k as u64, rep as u64]
        .into_iter()
        .fold(splitmix64(seed), |acc, x| splitmix64(acc ^ x))
}

fn emit(output: Option<&Path>, text: &str, out: &mut dyn Write) -> CliResult<()> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn relative_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= ENERGY_RTOL * a.abs().max(b.abs())
}

pub fn run_project(args: &ProjectArgs, gta: bool, out: &mut dyn Write) -> CliResult<()> {
    let (t, y) = read_signal(&args.input, args.d)?;
    let (method, result) = if gta {
        ("gta", gta_project(&t, &y, args.k)?)
    } else {
        ("etp", project_with(&t, &y, args.k, Execution::default())?)
    };
    let doc = ResultDocument::new(method, &t, args.k, result)?;
    emit(args.output.as_deref(), &doc.to_json(), out)
}

pub fn run_check(args: &CheckArgs, out: &mut dyn Write) -> CliResult<()> {
    let (t, y) = match (&args.input, args.random) {
        (Some(path), _) => {
            let (t, y) = read_signal(path, args.d)?;
            if let Some(levels) = args.levels.filter(|&l| l != t.levels()) {
                return Err(CliError::Usage(format!(
                    "input has J={} but --J {levels} was given",
                    t.levels()
                )));
            }
            (t, y)
        }
        (None, Some(seed)) => {
            let levels = args
                .levels
                .ok_or_else(|| CliError::Usage("--random needs --J".into()))?;
            let t = TreeTopology::new(args.d, levels)?;
            (t, Signal::gaussian(t.len(), seed))
        }
        (None, None) => return Err(CliError::Usage("need --input or --random".into())),
    };
    let ks = match (&args.k, &args.k_list) {
        (Some(k), _) => vec![*k],
        (None, Some(list)) => parse_int_list(list)?,
        (None, None) => (1..=t.len().min(12)).collect(),
    };
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > t.len()) {
        return Err(crate::Error::CardinalityOutOfRange { k, max: t.len() }.into());
    }

    let perturbed = y.perturbed(PERTURBATION_EPS);
    let mut failures = 0;
    for &k in &ks {
        let exact = project_with(&t, &y, k, Execution::default())?;
        let oracle = brute_force_project_with(&t, &y, k, args.max_enum, Execution::default())?;
        let exact_p = project_with(&t, &perturbed, k, Execution::default())?;
        let oracle_p =
            brute_force_project_with(&t, &perturbed, k, args.max_enum, Execution::default())?;
        let energies_ok = relative_eq(exact.energy, oracle.energy);
        let supports_ok = exact_p.support == oracle_p.support;
        if energies_ok && supports_ok {
            writeln!(
                out,
                "k={k} PASS energy {} = {} support {:?}",
                exact.energy,
                oracle.energy,
                exact.support.nodes()
            )?;
        } else {
            failures += 1;
            writeln!(
                out,
                "k={k} FAIL etp energy {} support {:?} | oracle energy {} support {:?} | \
                 perturbed etp {:?} oracle {:?}",
                exact.energy,
                exact.support.nodes(),
                oracle.energy,
                oracle.support.nodes(),
                exact_p.support.nodes(),
                oracle_p.support.nodes()
            )?;
        }
    }
    if failures > 0 {
        return Err(CliError::Verification(format!(
            "{failures} of {} cardinalities failed",
            ks.len()
        )));
    }
    Ok(())
}

struct Cell {
    topology: TreeTopology,
    k: usize,
    rep: usize,
}

fn bench_cell(cell: &Cell, seed: u64, exec: Execution) -> crate::Result<BenchRecord> {
    let t = &cell.topology;
    let seed = cell_seed(seed, t.order(), t.levels(), cell.k, cell.rep);
    let bound = complexity_bound(t.order(), t.len(), cell.k)?;
    let y = Signal::gaussian(t.len(), seed);
    let start = Instant::now();
    let result = project_with(t, &y, cell.k, exec)?;
    let wall_time = start.elapsed().as_secs_f64();
    Ok(BenchRecord {
        d: t.order(),
        levels: t.levels(),
        n: t.len(),
        k: cell.k,
        rep: cell.rep,
        seed,
        additions: result.ops.additions,
        comparisons: result.ops.comparisons,
        pass2_comparisons: result.ops.pass2_comparisons,
        bound,
        wall_time,
    })
}

/// Runs every (d, J, k, rep) cell; rows come back sorted by those keys.
pub fn bench_records(args: &BenchArgs) -> CliResult<Vec<BenchRecord>> {
    let levels = parse_int_list(&args.levels)?;
    let rules = parse_k_rules(&args.k_list)?;
    let mut cells = Vec::new();
    for &d in &args.d {
        for &j in &levels {
            let topology = TreeTopology::new(d, j as u32)?;
            let mut ks: Vec<usize> = rules.iter().map(|r| r.resolve(topology.len())).collect();
            ks.sort_unstable();
            ks.dedup();
            for k in ks {
                if k == 0 || k > topology.len() {
                    return Err(crate::Error::CardinalityOutOfRange {
                        k,
                        max: topology.len(),
                    }
                    .into());
                }
                cells.extend((0..args.reps).map(|rep| Cell { topology, k, rep }));
            }
        }
    }
    let (outer, inner) = if args.parallel_cells {
        (Execution::Parallel, Execution::Sequential)
    } else {
        (Execution::Sequential, Execution::Parallel)
    };
    let mut records = exec::map_collect(outer, &cells, |c| bench_cell(c, args.random, inner))
        .into_iter()
        .collect::<crate::Result<Vec<_>>>()?;
    records.sort_by_key(|r| (r.d, r.levels, r.k, r.rep));
    Ok(records)
}

pub fn run_bench(args: &BenchArgs, out: &mut dyn Write) -> CliResult<()> {
    let records = bench_records(args)?;
    let mut text = String::new();
    writeln!(text, "{}", BenchRecord::HEADER).expect("string write");
    for r in &records {
        writeln!(text, "{}", r.csv_row()).expect("string write");
    }
    emit(args.output.as_deref(), &text, out)?;
    let over = records.iter().filter(|r| !r.within_bound()).count();
    if over > 0 {
        return Err(CliError::Verification(format!(
            "{over} records exceed the operation bound"
        )));
    }
    Ok(())
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Project(args) => run_project(args, false, out),
        Command::Gta(args) => run_project(args, true, out),
        Command::Check(args) => run_check(args, out),
        Command::Bench(args) => run_bench(args, out),
    }
}
