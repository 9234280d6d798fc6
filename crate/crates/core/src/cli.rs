//! Command-line front end.
//!
//! Every report is a JSON object carrying the tool version, seed,
//! tolerances and resample count next to the command-specific payload.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{generic_bkk_facet, initial_witness, predicted_counts, torus_filter, CountPrediction, KernelWitness};
use crate::dynamics::{find_stable_equilibria, match_equilibria, MatchReport, OdeConfig};
use crate::error::{Error, Result};
use crate::model::{CycleInstance, PhaseState};
use crate::polytope::{enumerate_facets, facet_count, Facet, Parity};
use crate::rng::{streams, substream};
use crate::solver::{census, Census, CensusReport, InstanceSource, SolverConfig, TorusSolution, TOOL_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const N_RANGE: std::ops::RangeFrom<u64> = 3..;

#[derive(Debug, Parser)]
#[command(name = "kuramoto-cycle", version, about = "Synchronization census for Kuramoto cycle networks")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_residual: f64,

    #[arg(long, global = true, default_value_t = 1e-6)]
    tol_dedup: f64,

    /// Run independent work items on the thread pool.
    #[arg(long, global = true, default_value_t = true, action = clap::ArgAction::Set)]
    parallel: bool,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Predicted root count, bound and gap
    Count {
        #[arg(value_parser = clap::value_parser!(u64).range(N_RANGE))]
        n: u64,
    },
    /// Facets of the adjacency polytope
    Facets {
        #[arg(value_parser = clap::value_parser!(u64).range(N_RANGE))]
        n: u64,
        #[arg(long)]
        list: bool,
    },
    /// Solve one instance facet by facet
    Solve {
        #[arg(value_parser = clap::value_parser!(u64).range(N_RANGE))]
        n: u64,
        /// Comma-separated natural frequencies, e.g. "1.5-0.25i,0.3,-2i"
        #[arg(long, allow_hyphen_values = true)]
        omega: Option<String>,
        /// Coupling coefficient as a complex literal
        #[arg(long, allow_hyphen_values = true)]
        a: Option<String>,
    },
    /// Repeat the census with fresh seeds and check the count never changes
    Verify {
        #[arg(value_parser = clap::value_parser!(u64).range(N_RANGE))]
        n: u64,
        #[arg(long, default_value_t = 5)]
        trials: u64,
    },
    /// Torus zeros of the initial systems, one per facet when they exist
    Witness {
        #[arg(value_parser = clap::value_parser!(u64).range(N_RANGE))]
        n: u64,
    },
    /// Root counts of facet subsystems with random coefficients
    Oracle {
        #[arg(value_parser = clap::value_parser!(u64).range(N_RANGE))]
        n: u64,
        #[arg(long)]
        facet: Option<usize>,
    },
    /// Compare stable equilibria of the phase dynamics with the census
    Ode {
        #[arg(value_parser = clap::value_parser!(u64).range(N_RANGE))]
        n: u64,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 200)]
        starts: usize,
        /// Frequencies are drawn uniformly from (-spread, spread).
        #[arg(long, default_value_t = 0.1)]
        spread: f64,
    },
}

/// Parse a complex literal such as `1.5-0.25i`, `-2i`, `i` or `3`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let bad = || Error::InvalidArgument(format!("malformed complex literal {s:?}"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(bad());
    }
    let num = |x: &str| x.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(num(&t)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |x: &str| match x {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => num(x),
    };
    let z = match split {
        Some(k) => Complex64::new(num(&body[..k])?, imag(&body[k..])?),
        None => Complex64::new(0.0, imag(body)?),
    };
    Ok(z)
}

pub fn parse_complex_list(s: &str) -> Result<Vec<Complex64>> {
    s.split(',').map(parse_complex).collect()
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool_version: &'static str,
    command: &'a str,
    seed: u64,
    tol_residual: f64,
    tol_dedup: f64,
    resample_count: usize,
    passed: bool,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct FacetsBody {
    #[serde(rename = "N")]
    n_nodes: usize,
    parity: Parity,
    count: u64,
    enumerated: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    facets: Option<Vec<Facet>>,
}

#[derive(Serialize)]
struct SolveBody<'a> {
    instance: &'a CycleInstance,
    report: &'a CensusReport,
    solutions: &'a [TorusSolution],
}

#[derive(Serialize)]
struct TrialRecord {
    seed: u64,
    total: usize,
    resample_count: usize,
    max_residual_full: f64,
}

#[derive(Serialize)]
struct VerifyBody {
    #[serde(rename = "N")]
    n_nodes: usize,
    predicted: u64,
    trials: Vec<TrialRecord>,
}

#[derive(Serialize)]
struct WitnessBody {
    #[serde(rename = "N")]
    n_nodes: usize,
    witness_expected: bool,
    facets: usize,
    facets_with_witness: usize,
    witnesses: Vec<Option<KernelWitness>>,
}

#[derive(Serialize)]
struct OracleEntry {
    facet_id: usize,
    generic_count: u64,
}

#[derive(Serialize)]
struct OracleBody {
    #[serde(rename = "N")]
    n_nodes: usize,
    expected_generic: u64,
    expected_uniform: u64,
    facets: Vec<OracleEntry>,
}

#[derive(Serialize)]
struct OdeBody {
    #[serde(rename = "N")]
    n_nodes: usize,
    ode: OdeConfig,
    starts: usize,
    census_total: usize,
    torus_solutions: usize,
    equilibria: Vec<PhaseState>,
    matching: MatchReport,
}

struct Output {
    text: String,
    passed: bool,
}

fn to_json<T: Serialize>(cli: &Cli, command: &str, resample_count: usize, passed: bool, body: T) -> Result<Output> {
    let env = Envelope {
        tool_version: TOOL_VERSION,
        command,
        seed: cli.seed,
        tol_residual: cli.tol_residual,
        tol_dedup: cli.tol_dedup,
        resample_count,
        passed,
        body,
    };
    let mut text = serde_json::to_string_pretty(&env).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    text.push('\n');
    Ok(Output { text, passed })
}

fn solutions_csv(c: &Census) -> Result<String> {
    let n = c.instance.dim();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["facet_id".to_string()];
    for i in 1..=n {
        header.push(format!("x{i}_re"));
        header.push(format!("x{i}_im"));
    }
    header.extend(["residual_sub".into(), "residual_full".into()]);
    let csv_err = |e: csv::Error| Error::InvalidArgument(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for s in &c.solutions {
        let mut rec = vec![s.facet_id.to_string()];
        for z in &s.x.x {
            rec.push(z.re.to_string());
            rec.push(z.im.to_string());
        }
        rec.push(s.residual_sub.to_string());
        rec.push(s.residual_full.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn solver_config(cli: &Cli) -> SolverConfig {
    SolverConfig { tol_residual: cli.tol_residual, tol_dedup: cli.tol_dedup, parallel: cli.parallel, ..SolverConfig::default() }
}

fn instance_source(cli: &Cli, n_nodes: usize, omega: &Option<String>, a: &Option<String>) -> Result<InstanceSource> {
    if omega.is_none() && a.is_none() {
        return Ok(InstanceSource::Sampled);
    }
    let base = CycleInstance::sample_generic(n_nodes, &mut substream(cli.seed, streams::INSTANCE))?;
    let omega = match omega {
        Some(s) => parse_complex_list(s)?,
        None => base.omega().to_vec(),
    };
    let a = match a {
        Some(s) => parse_complex(s)?,
        None => base.coupling(),
    };
    Ok(InstanceSource::Fixed(CycleInstance::new(n_nodes, omega, a)?))
}

fn execute(cli: &Cli) -> Result<Output> {
    if cli.format == Format::Csv && !matches!(cli.command, Command::Solve { .. }) {
        return Err(Error::InvalidArgument("csv output is only available for solve".into()));
    }
    if !(cli.tol_residual > 0.0 && cli.tol_dedup > 0.0) {
        return Err(Error::InvalidArgument("tolerances must be positive".into()));
    }
    match &cli.command {
        Command::Count { n } => {
            let p: CountPrediction = predicted_counts(*n as usize)?;
            to_json(cli, "count", 0, true, p)
        }
        Command::Facets { n, list } => {
            let n_nodes = *n as usize;
            let facets = enumerate_facets(n_nodes)?;
            let count = facet_count(n_nodes)?;
            let body = FacetsBody {
                n_nodes,
                parity: Parity::of(n_nodes),
                count,
                enumerated: facets.len(),
                facets: list.then_some(facets.clone()),
            };
            to_json(cli, "facets", 0, count == facets.len() as u64, body)
        }
        Command::Solve { n, omega, a } => {
            let n_nodes = *n as usize;
            let source = instance_source(cli, n_nodes, omega, a)?;
            let c = census(n_nodes, cli.seed, &source, &solver_config(cli))?;
            let passed = c.report.total as u64 == c.report.predicted;
            if cli.format == Format::Csv {
                return Ok(Output { text: solutions_csv(&c)?, passed });
            }
            let body = SolveBody { instance: &c.instance, report: &c.report, solutions: &c.solutions };
            to_json(cli, "solve", c.report.resample_count, passed, body)
        }
        Command::Verify { n, trials } => {
            let n_nodes = *n as usize;
            let cfg = solver_config(cli);
            let predicted = predicted_counts(n_nodes)?.total;
            let mut records = Vec::new();
            for t in 0..*trials {
                let seed = cli.seed.wrapping_add(t);
                let c = census(n_nodes, seed, &InstanceSource::Sampled, &cfg)?;
                records.push(TrialRecord {
                    seed,
                    total: c.report.total,
                    resample_count: c.report.resample_count,
                    max_residual_full: c.report.max_residual_full,
                });
            }
            let passed = records.iter().all(|r| r.total as u64 == predicted);
            let resamples = records.iter().map(|r| r.resample_count).sum();
            to_json(cli, "verify", resamples, passed, VerifyBody { n_nodes, predicted, trials: records })
        }
        Command::Witness { n } => {
            let n_nodes = *n as usize;
            let facets = enumerate_facets(n_nodes)?;
            let witnesses =
                facets.iter().enumerate().map(|(i, f)| initial_witness(i, f, n_nodes)).collect::<Result<Vec<_>>>()?;
            let with = witnesses.iter().filter(|w| w.is_some()).count();
            let expected = n_nodes % 4 == 0;
            let passed = if expected { with == facets.len() } else { with == 0 };
            let body =
                WitnessBody { n_nodes, witness_expected: expected, facets: facets.len(), facets_with_witness: with, witnesses };
            to_json(cli, "witness", 0, passed, body)
        }
        Command::Oracle { n, facet } => {
            let n_nodes = *n as usize;
            let facets = enumerate_facets(n_nodes)?;
            let ids: Vec<usize> = match facet {
                Some(i) if *i < facets.len() => vec![*i],
                Some(i) => {
                    return Err(Error::InvalidArgument(format!("facet {i} out of range (N = {n_nodes} has {})", facets.len())))
                }
                None => (0..facets.len()).collect(),
            };
            let entries = ids
                .into_iter()
                .map(|i| Ok(OracleEntry { facet_id: i, generic_count: generic_bkk_facet(&facets[i], n_nodes, cli.seed)? }))
                .collect::<Result<Vec<_>>>()?;
            let expected_generic = if n_nodes % 2 == 1 { 1 } else { n_nodes as u64 / 2 };
            let expected_uniform = predicted_counts(n_nodes)?.per_facet;
            let passed = entries.iter().all(|e| e.generic_count == expected_generic);
            to_json(cli, "oracle", 0, passed, OracleBody { n_nodes, expected_generic, expected_uniform, facets: entries })
        }
        Command::Ode { n, k, starts, spread } => {
            let n_nodes = *n as usize;
            if !(*spread > 0.0) {
                return Err(Error::InvalidArgument("spread must be positive".into()));
            }
            let inst = CycleInstance::sample_real(n_nodes, *k, *spread, &mut substream(cli.seed, streams::INSTANCE))?;
            let omega: Vec<f64> = inst.omega().iter().map(|w| w.re).collect();
            let c = census(n_nodes, cli.seed, &InstanceSource::Fixed(inst), &solver_config(cli))?;
            let configs = torus_filter(&c.solutions, 1e-6);
            let ode = OdeConfig::new(*k, omega)?;
            let equilibria = find_stable_equilibria(&ode, *starts, cli.seed);
            let matching = match_equilibria(&equilibria, &configs, 1e-5);
            let passed = c.report.total as u64 == c.report.predicted && matching.all_matched();
            let body = OdeBody {
                n_nodes,
                ode,
                starts: *starts,
                census_total: c.report.total,
                torus_solutions: configs.len(),
                equilibria,
                matching,
            };
            to_json(cli, "ode", c.report.resample_count, passed, body)
        }
    }
}

/// Run with explicit output streams; returns the process exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let msg = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{msg}");
            } else {
                let _ = write!(stderr, "{msg}");
            }
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let out = match execute(&cli) {
        Ok(out) => out,
        Err(e @ (Error::InvalidArgument(_) | Error::Dimension(_) | Error::TooFewNodes(_) | Error::ZeroCoupling | Error::Overflow)) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_USAGE;
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_MISMATCH;
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &out.text),
        None => stdout.write_all(out.text.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: cannot write report: {e}");
        return EXIT_MISMATCH;
    }
    if !out.passed {
        let _ = writeln!(stderr, "assertion failed: see report");
        return EXIT_MISMATCH;
    }
    EXIT_OK
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
