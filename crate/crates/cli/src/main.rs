//! `qsample`: run chain diagnostics, walk verification, quantum sampling and
//! annealing experiments from JSON input files.
//!
//! Exit codes: 0 success, 2 input error, 3 verification failure,
//! 4 resource cap.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use qsample::annealing::{
    anneal_sample, find_ground_state, min_phase_gap, required_beta, schedule, zeno_betas,
    zeno_cost_comparison, EnergyLandscape, LandscapeFile, GROUND_EPS3,
};
use qsample::check::BoundCheck;
use qsample::markov_core::{
    classify, mixing_time_bounds, spectral_gap, stationary_distribution, ChainDiagnostics,
    ChainFile, MixingBounds, SpectralData, StochasticMatrix, Tolerances,
};
use qsample::quantum_sampler::{
    plan_for, run_from_stationary, Backend, ChainSequence, SampleResult,
};
use qsample::quantum_sim::DIMENSION_CAP_ENV;
use qsample::szegedy_walk::{verify_walk, WalkReport};
use qsample::Error;

#[derive(Parser)]
#[command(name = "qsample", version, about = "Quantum sampling experiments on reversible Markov chains")]
struct Cli {
    /// Largest state-vector dimension a dense simulation may allocate.
    #[arg(long, global = true, env = DIMENSION_CAP_ENV)]
    dim_cap: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a chain, its stationary distribution, spectrum and mixing bounds.
    ChainReport {
        input: PathBuf,
        /// Variation-distance target for the mixing-time bounds.
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Build the quantized walk and check its busy spectrum and phase gap.
    WalkVerify {
        input: PathBuf,
        /// Identifier echoed into the report; defaults to the file stem.
        #[arg(long)]
        id: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Sample the last stationary distribution of a chain sequence, or of an
    /// annealing schedule when given a landscape file.
    Sample {
        input: PathBuf,
        /// Target total-variation distance.
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        /// Final inverse temperature; required for landscape input.
        #[arg(long)]
        beta_final: Option<f64>,
        /// Number of seeded draws from the output distribution.
        #[arg(long, default_value_t = 0)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
        backend: BackendArg,
        #[command(flatten)]
        out: Output,
    },
    /// Anneal a landscape to `--beta-final` and report schedule, overlaps and costs.
    Anneal {
        input: PathBuf,
        #[arg(long)]
        beta_final: f64,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
        backend: BackendArg,
        #[command(flatten)]
        out: Output,
    },
    /// Anneal with eps = eps3 = 1/4 and draw `--runs` seeded samples.
    GroundState {
        input: PathBuf,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
        backend: BackendArg,
        #[command(flatten)]
        out: Output,
    },
    /// Cost models of this annealer against the Zeno approach.
    ZenoCompare {
        input: PathBuf,
        /// Defaults to ln(3d)/gamma.
        #[arg(long)]
        beta_final: Option<f64>,
        /// Phase gap (radians) of our schedule; computed when omitted.
        #[arg(long, requires = "delta_prime")]
        delta: Option<f64>,
        /// Phase gap (radians) of the Zeno schedule; computed when omitted.
        #[arg(long, requires = "delta")]
        delta_prime: Option<f64>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    /// Only `sample` supports CSV: `state,prob_target,prob_measured`.
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Auto,
    Dense,
    Projected,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Auto => Backend::Auto,
            BackendArg::Dense => Backend::Dense,
            BackendArg::Projected => Backend::Projected,
        }
    }
}

enum Failure {
    Input(String),
    Verification(String),
    Resource(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Verification(_) => 3,
            Failure::Resource(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Verification(m) | Failure::Resource(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::DimensionCap { .. } => Failure::Resource(msg),
            Error::Verification(_)
            | Error::NotUnitary(_)
            | Error::AncillaNotClean(_)
            | Error::DegenerateFixedSpace(_) => Failure::Verification(msg),
            _ => Failure::Input(msg),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, value: Value) -> CliResult<T> {
    serde_json::from_value(value).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_chain(path: &Path) -> CliResult<StochasticMatrix> {
    let file: ChainFile = parse(path, read_json(path)?)?;
    Ok(file.to_chain()?)
}

fn load_landscape(path: &Path) -> CliResult<EnergyLandscape> {
    let file: LandscapeFile = parse(path, read_json(path)?)?;
    Ok(file.to_landscape()?)
}

fn check_eps(eps: f64) -> CliResult<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Failure::Input(format!("--eps must lie in (0, 1), got {eps}")))
    }
}

fn emit(out: &Output, body: &str) -> CliResult<()> {
    match &out.output {
        Some(path) => fs::write(path, body)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .map_err(|e| Failure::Input(e.to_string()))
        }
    }
}

fn emit_json<T: Serialize>(out: &Output, value: &T) -> CliResult<()> {
    if out.format == Format::Csv {
        return Err(Failure::Input("CSV output is only available for `sample`".into()));
    }
    let mut body = serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.to_string()))?;
    body.push('\n');
    emit(out, &body)
}

#[derive(Serialize)]
struct ChainReport {
    states: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    diagnostics: ChainDiagnostics,
    stationary: Option<Vec<f64>>,
    spectral: Option<SpectralData>,
    /// `δ` as reported by the spectral decomposition.
    delta: Option<f64>,
    mixing: Option<MixingBounds>,
    notes: Vec<String>,
}

fn chain_report(input: &Path, eps: f64) -> CliResult<ChainReport> {
    check_eps(eps)?;
    let chain = load_chain(input)?;
    let diagnostics = classify(&chain, &Tolerances::default());
    let mut notes = Vec::new();
    if !diagnostics.irreducible {
        notes.push("not irreducible".to_string());
    } else if !diagnostics.aperiodic {
        notes.push(format!("periodic with period {}", diagnostics.period));
    }
    let stationary = if diagnostics.ergodic {
        Some(stationary_distribution(&chain)?.probs().to_vec())
    } else {
        None
    };
    let (spectral, mixing) = if diagnostics.ergodic && diagnostics.reversible {
        (Some(spectral_gap(&chain)?), Some(mixing_time_bounds(&chain, eps)?))
    } else {
        if diagnostics.ergodic {
            notes.push("not reversible; spectrum and mixing bounds skipped".to_string());
        }
        (None, None)
    };
    Ok(ChainReport {
        states: chain.len(),
        labels: chain.labels().map(<[String]>::to_vec),
        delta: spectral.as_ref().map(|s| s.gap),
        diagnostics,
        stationary,
        spectral,
        mixing,
        notes,
    })
}

#[derive(Serialize)]
struct WalkVerifyReport {
    #[serde(flatten)]
    report: WalkReport,
    /// Phase gap against `2 sqrt(δ)`.
    gap_bound: BoundCheck,
    /// Largest busy-eigenvalue mismatch against `1e-9`.
    spectrum: BoundCheck,
}

fn walk_verify(input: &Path, id: Option<String>) -> CliResult<WalkVerifyReport> {
    let chain = load_chain(input)?;
    let id = id.unwrap_or_else(|| {
        input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let diagnostics = classify(&chain, &Tolerances::default());
    if !diagnostics.ergodic {
        return Err(Failure::Input("chain is not ergodic".into()));
    }
    if !diagnostics.reversible {
        return Err(Failure::Input(format!(
            "chain is not reversible (detailed balance violation {:e})",
            diagnostics.detailed_balance_violation.unwrap_or(f64::NAN)
        )));
    }
    let report = verify_walk(&chain, &id)?;
    Ok(WalkVerifyReport {
        gap_bound: BoundCheck::at_least(report.phase_gap, 2.0 * report.delta.sqrt()),
        spectrum: BoundCheck::at_most(report.max_spectral_mismatch, 1e-9),
        report,
    })
}

#[derive(Deserialize)]
struct SequenceFile {
    chains: Vec<ChainFile>,
}

#[derive(Serialize)]
struct SampleReport {
    input: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_final: Option<f64>,
    #[serde(flatten)]
    result: SampleResult,
    seed: u64,
    shots: usize,
    /// Draw counts per state plus `"bottom"`; empty when `shots` is 0.
    counts: std::collections::BTreeMap<String, usize>,
}

fn sample_cmd(
    input: &Path,
    eps: f64,
    beta_final: Option<f64>,
    shots: usize,
    seed: u64,
    backend: Backend,
) -> CliResult<SampleReport> {
    check_eps(eps)?;
    let value = read_json(input)?;
    let (seq, p) = if value.get("chains").is_some() {
        let file: SequenceFile = parse(input, value)?;
        let chains = file
            .chains
            .iter()
            .map(ChainFile::to_chain)
            .collect::<qsample::Result<Vec<_>>>()?;
        let seq = ChainSequence::new(chains)?;
        let p = seq.p;
        (seq, p)
    } else if value.get("energies").is_some() {
        let beta_final = beta_final.ok_or_else(|| {
            Failure::Input("landscape input needs --beta-final".into())
        })?;
        let file: LandscapeFile = parse(input, value)?;
        let landscape = file.to_landscape()?;
        let sched = schedule(&landscape, beta_final)?;
        let chains = sched
            .betas
            .iter()
            .map(|&b| qsample::annealing::metropolis_chain(&landscape, b))
            .collect::<qsample::Result<Vec<_>>>()?;
        let p = if sched.r == 0 { 1.0 } else { sched.p };
        (ChainSequence::new(chains)?, p)
    } else {
        return Err(Failure::Input(format!(
            "{}: expected a sequence file with \"chains\" or a landscape file with \"energies\"",
            input.display()
        )));
    };
    let params = plan_for(seq.r(), p, seq.delta_turns, eps)?;
    let result = run_from_stationary(&seq, &params, backend)?;

    let mut counts = std::collections::BTreeMap::new();
    if shots > 0 {
        for x in 0..seq.states() {
            counts.insert(x.to_string(), 0);
        }
        counts.insert("bottom".to_string(), 0);
        for draw in result.distribution.sample(shots, seed) {
            let key = draw.map_or_else(|| "bottom".to_string(), |x| x.to_string());
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    Ok(SampleReport {
        input: input.display().to_string(),
        beta_final,
        result,
        seed,
        shots,
        counts,
    })
}

fn sample_csv(report: &SampleReport) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Failure::Input(e.to_string());
    w.write_record(["state", "prob_target", "prob_measured"]).map_err(err)?;
    let res = &report.result;
    for (x, (t, m)) in res.target.iter().zip(&res.distribution.probs).enumerate() {
        w.write_record([x.to_string(), t.to_string(), m.to_string()]).map_err(err)?;
    }
    w.write_record(["bottom".to_string(), "0".to_string(), res.distribution.bottom.to_string()])
        .map_err(err)?;
    let bytes = w.into_inner().map_err(|e| Failure::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Input(e.to_string()))
}

fn zeno_compare(
    input: &Path,
    beta_final: Option<f64>,
    gaps: Option<(f64, f64)>,
) -> CliResult<qsample::annealing::ZenoComparison> {
    let landscape = load_landscape(input)?;
    let (delta, delta_prime) = match gaps {
        Some(g) => g,
        None => {
            let beta = match beta_final {
                Some(b) => b,
                None => required_beta(landscape.gamma(), landscape.d(), GROUND_EPS3)?,
            };
            let sched = schedule(&landscape, beta)?;
            let fine = zeno_betas(&landscape, &sched)?;
            (
                min_phase_gap(&landscape, &sched.betas)?,
                min_phase_gap(&landscape, &fine)?,
            )
        }
    };
    Ok(zeno_cost_comparison(&landscape, delta_prime, delta)?)
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(cap) = cli.dim_cap {
        // read back by the simulator on every allocation check
        std::env::set_var(DIMENSION_CAP_ENV, cap.to_string());
    }
    match cli.command {
        Command::ChainReport { input, eps, out } => emit_json(&out, &chain_report(&input, eps)?),
        Command::WalkVerify { input, id, out } => {
            let report = walk_verify(&input, id)?;
            emit_json(&out, &report)?;
            if report.report.spectrum_ok && report.report.bound_ok {
                Ok(())
            } else {
                Err(Failure::Verification("walk spectrum or phase-gap bound failed".into()))
            }
        }
        Command::Sample {
            input,
            eps,
            beta_final,
            shots,
            seed,
            backend,
            out,
        } => {
            let report = sample_cmd(&input, eps, beta_final, shots, seed, backend.into())?;
            match out.format {
                Format::Json => emit_json(&out, &report)?,
                Format::Csv => emit(&out, &sample_csv(&report)?)?,
            }
            if report.result.checks.all_ok() {
                Ok(())
            } else {
                Err(Failure::Verification("sampling bound checks failed".into()))
            }
        }
        Command::Anneal {
            input,
            beta_final,
            eps,
            backend,
            out,
        } => {
            check_eps(eps)?;
            let landscape = load_landscape(&input)?;
            let report = anneal_sample(&landscape, beta_final, eps, backend.into())?;
            emit_json(&out, &report)?;
            if report.sample.checks.all_ok() && report.overlaps.iter().all(|c| c.ok) {
                Ok(())
            } else {
                Err(Failure::Verification("annealing bound checks failed".into()))
            }
        }
        Command::GroundState {
            input,
            runs,
            seed,
            backend,
            out,
        } => {
            let landscape = load_landscape(&input)?;
            let report = find_ground_state(&landscape, runs, seed, backend.into())?;
            emit_json(&out, &report)?;
            if report.success.ok {
                Ok(())
            } else {
                Err(Failure::Verification("success probability is not above 1/2".into()))
            }
        }
        Command::ZenoCompare {
            input,
            beta_final,
            delta,
            delta_prime,
            out,
        } => {
            let gaps = delta.zip(delta_prime);
            emit_json(&out, &zeno_compare(&input, beta_final, gaps)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
