//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed verification, 2 bad input, 3 internal
//! inconsistency or numerical failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::{self, Estimator, NoiseSpec};
use crate::protocol::{self, ProtocolConfig, SearchConfig};
use crate::state::{self, Canonical, PureState};
use crate::tangle::{self, TangleRow};
use crate::verify::{self, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tritangle", version, about = "Tripartite entanglement of 2x2xn pure states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact tau, concurrences, spectrum and bounds.
    Compute(StateArgs),
    /// Simulated two-copy measurement with finite shots.
    Simulate(SimulateArgs),
    /// The measurable lower bounds next to tau.
    Bound(StateArgs),
    /// Deviation of the estimate under preparation noise.
    NoiseScan(NoiseArgs),
    /// Seeded self-tests of the core identities.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StateArgs {
    /// A state file, one of `ghz`, `w`, `product`, `gghz:<theta>`, or `random`.
    #[arg(long, default_value = "ghz")]
    state: String,
    /// Dimension of `C` for `random`.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Shots per measurement setting.
    #[arg(long, default_value_t = 1_000_000)]
    shots: u64,
    /// Find the basis by searching the wave-plate settings.
    #[arg(long)]
    search: bool,
    /// Off-diagonal signal at which the search stops.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Debug, Args)]
struct NoiseArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Comma-separated noise strengths in [0, 0.2].
    #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.02,0.03,0.05")]
    eps: Vec<f64>,
    /// Sample the diagonal with this many shots instead of using exact values.
    #[arg(long)]
    shots: Option<u64>,
    /// Search the basis again on every noisy pair.
    #[arg(long)]
    reoptimize: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random draws per suite and size.
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Comma-separated sizes of `C`.
    #[arg(long, value_delimiter = ',', default_value = "2,3,5,8")]
    n: Vec<usize>,
    #[command(flatten)]
    output: OutputArgs,
    /// Flip two signs of the spin-flip kernel inside `M`; the run must fail.
    #[arg(long, hide = true)]
    inject_kernel_bug: bool,
}

/// Resolves `--state` and `--n` to a state.
pub fn resolve_state(spec: &str, n: Option<usize>, seed: u64) -> Result<PureState> {
    let s = if spec.eq_ignore_ascii_case("random") {
        let n = n.unwrap_or(2);
        if n == 0 {
            return Err(Error::Domain("n must be at least 1".into()));
        }
        state::random_pure(n, seed)?
    } else if let Ok(name) = spec.parse::<Canonical>() {
        state::canonical_state(name)
    } else if spec.to_ascii_lowercase().starts_with("gghz:") {
        // A malformed angle is reported as such, not as a missing file.
        return Err(spec.parse::<Canonical>().unwrap_err());
    } else {
        let text = std::fs::read_to_string(spec).map_err(|e| Error::Parse(format!("{spec}: {e}")))?;
        let s = state::parse_state_json(&text)?;
        if s.was_renormalized() {
            eprintln!("warning: amplitudes in {spec} were renormalized");
        }
        s
    };
    match n {
        Some(n) if n != s.n() => Err(Error::Dimension(format!("--n {n} given for a state with n = {}", s.n()))),
        _ => Ok(s),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InternalInconsistency(_) | Error::Numeric(_) | Error::NotSymmetric(_) => EXIT_INTERNAL,
        _ => EXIT_INPUT,
    }
}

fn emit(output: &OutputArgs, text: &str) -> Result<()> {
    match &output.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Numeric(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numeric(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Numeric(e.to_string()))
}

fn format_of(output: &OutputArgs) -> Format {
    output.format.unwrap_or(Format::Json)
}

fn cmd_compute(a: &StateArgs) -> Result<i32> {
    let s = resolve_state(&a.state, a.n, a.seed)?;
    let report = tangle::tau(&s)?;
    let text = match format_of(&a.output) {
        Format::Json => to_json(&report)?,
        Format::Csv => to_csv(&[TangleRow::from(&report)])?,
    };
    emit(&a.output, &text)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct BoundRow {
    n: usize,
    tau: f64,
    spectral: f64,
    sigma_u: f64,
    q_star: f64,
    sigma_u_at_zero: f64,
    sigma_u_at_half: f64,
    sigma_u_at_one: f64,
    qubit_det_exact: Option<f64>,
    qubit_det_bound: Option<f64>,
}

fn cmd_bound(a: &StateArgs) -> Result<i32> {
    let s = resolve_state(&a.state, a.n, a.seed)?;
    let r = tangle::tau(&s)?;
    let b = &r.bounds;
    let row = BoundRow {
        n: r.n,
        tau: r.tau,
        spectral: b.spectral,
        sigma_u: b.sigma_u.bound,
        q_star: b.sigma_u.q_star,
        sigma_u_at_zero: b.sigma_u.at_zero,
        sigma_u_at_half: b.sigma_u.at_half,
        sigma_u_at_one: b.sigma_u.at_one,
        qubit_det_exact: b.qubit_det.map(|d| d.exact),
        qubit_det_bound: b.qubit_det.map(|d| d.bound),
    };
    let text = match format_of(&a.output) {
        Format::Json => to_json(&row)?,
        Format::Csv => to_csv(&[row])?,
    };
    emit(&a.output, &text)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct SettingRow {
    i: usize,
    j: usize,
    probability: f64,
    counts: u64,
    shots: u64,
    p_hat: f64,
    m_abs_hat: f64,
}

fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    let st = &a.state;
    let s = resolve_state(&st.state, st.n, st.seed)?;
    if a.shots == 0 {
        return Err(Error::Domain("--shots must be at least 1".into()));
    }
    let search = a.search.then(|| SearchConfig { seed: st.seed, tol: a.tol, ..Default::default() });
    let cfg = ProtocolConfig { shots_per_setting: a.shots, seed: st.seed, search };
    let report = protocol::tau_from_protocol(&s, &cfg)?;
    let text = match format_of(&st.output) {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let rows: Vec<SettingRow> = report
                .diagonal
                .iter()
                .chain(&report.off_diagonal)
                .map(|d| SettingRow {
                    i: d.i,
                    j: d.j,
                    probability: d.probability,
                    counts: d.estimate.counts,
                    shots: d.estimate.shots,
                    p_hat: d.estimate.p_hat,
                    m_abs_hat: d.estimate.m_abs_hat,
                })
                .collect();
            to_csv(&rows)?
        }
    };
    emit(&st.output, &text)?;
    if format_of(&st.output) == Format::Csv {
        eprintln!("tau_hat = {}", report.tau_hat);
    }
    Ok(EXIT_OK)
}

fn cmd_noise_scan(a: &NoiseArgs) -> Result<i32> {
    let st = &a.state;
    if let Some(&bad) = a.eps.iter().find(|e| !(0.0..=noise::MAX_SCAN_EPS).contains(*e)) {
        return Err(Error::Domain(format!("eps = {bad} outside [0, {}]", noise::MAX_SCAN_EPS)));
    }
    let s = resolve_state(&st.state, st.n, st.seed)?;
    let template = NoiseSpec::defaults(&s, 0.0)?;
    let estimator = match a.shots {
        Some(0) => return Err(Error::Domain("--shots must be at least 1".into())),
        Some(shots) => Estimator::Protocol { shots, seed: st.seed },
        None => Estimator::ExactDiag,
    };
    let scan = noise::deviation_scan(&s, &template, &a.eps, estimator, a.reoptimize)?;
    match format_of(&st.output) {
        Format::Json => emit(&st.output, &to_json(&scan)?)?,
        Format::Csv => {
            emit(&st.output, &to_csv(&scan.rows)?)?;
            let summary = serde_json::json!({
                "slope": scan.slope,
                "r_squared": scan.r_squared,
                "fit_points": scan.fit_points,
                "perturbative": scan.perturbative,
            });
            eprintln!("{summary}");
        }
    }
    Ok(EXIT_OK)
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    if a.n.is_empty() || a.n.contains(&0) || a.trials == 0 {
        return Err(Error::Domain("verify needs sizes >= 1 and trials >= 1".into()));
    }
    let cfg = VerifyConfig {
        seed: a.seed,
        trials: a.trials,
        sizes: a.n.clone(),
        kernel: a.inject_kernel_bug.then(verify::mutated_kernel),
    };
    let report = verify::run_all(&cfg)?;
    let text = match a.output.format {
        Some(Format::Json) => to_json(&report)?,
        Some(Format::Csv) => to_csv(&report.suites)?,
        None => table(&report),
    };
    emit(&a.output, &text)?;
    Ok(if report.all_passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

fn table(r: &verify::VerifyReport) -> String {
    let mut out = format!("seed {}  trials {}  sizes {:?}\n", r.seed, r.trials, r.sizes);
    for s in &r.suites {
        out += &format!(
            "{:<5} {:<13} cases {:>5}  worst {:>10.3e}  tol {:.0e}  {}\n",
            if s.passed { "PASS" } else { "FAIL" },
            s.name,
            s.cases,
            s.worst,
            s.tolerance,
            s.note
        );
    }
    if let Some(f) = r.trace_factor {
        out += &format!("trace identity factor: {f:.12}\n");
    }
    out
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Compute(a) => cmd_compute(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::NoiseScan(a) => cmd_noise_scan(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
