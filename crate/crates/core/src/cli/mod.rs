//! The `qprep` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 input or parse error, 3 numerical
//! failure (including failed acceptance criteria under `reproduce`).

mod config;

pub use config::{config_path, merge_config, parse_config};

use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::encodesim::{simulate_mps_circuit, simulate_mps_circuit_householder, simulate_sos_encoding, EncodeError, SimulationBudget};
use crate::gf2::{compress_with_stats, Gf2Error, Gf2Vec};
use crate::hamiltonian::{
    build_ci_matrix_with_cap, parse_fcidump, read_dense_binary, read_dense_csv, write_dense_binary, write_dense_csv,
    DenseHamiltonian, HamiltonianError, DEFAULT_DIMENSION_CAP,
};
use crate::leakage::{
    diagnose_leakage, leak_prob_approx, leak_prob_exact, leak_prob_integral, LeakageError, LeakageSetup, DEFAULT_RISK_FACTOR,
};
use crate::linalg::{CVec, C64};
use crate::qpestats::{expected_min, goldilocks_report, qpe_outcome_distribution, wasserstein1, QpeStatsError, DEFAULT_EASY_THRESHOLD};
use crate::refine::{
    coarse_qpe_postselect, gaussian_case_study, qetu_filter, qetu_params, symmetric_filter, CaseStudyConfig, QetuFrame,
    RefineError, RefineResult,
};
use crate::reproduce::{run_criterion, CRITERION_IDS};
use crate::resources::{mps_cost_sweep, power_of_two_range, sos_cost_sweep, sweep_to_csv};
use crate::spectra::{
    coarse_qpe_sample, edgeworth, gram_charlier, kde, moments, normalized_spectral_measure, resolvent_distribution,
    resolvent_distribution_real, Bandwidth, Grid, MomentSet, SpectraError, SpectralMeasure,
};
use crate::states::{
    mps_to_sos, read_mps_binary, read_sos_json, sos_to_mps, write_mps_binary, write_sos_json, MpsState, SosState,
    SosToMpsOptions, StatesError,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<HamiltonianError> for CliError {
    fn from(e: HamiltonianError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<Gf2Error> for CliError {
    fn from(e: Gf2Error) -> Self {
        match e {
            Gf2Error::SearchExhausted { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<StatesError> for CliError {
    fn from(e: StatesError) -> Self {
        match e {
            StatesError::NotCanonical { .. } | StatesError::ZeroNorm => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<EncodeError> for CliError {
    fn from(e: EncodeError) -> Self {
        match e {
            EncodeError::States(s) => s.into(),
            EncodeError::Gf2(g) => g.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<SpectraError> for CliError {
    fn from(e: SpectraError) -> Self {
        match e {
            SpectraError::SolverFailure { .. } | SpectraError::ZeroVariance => CliError::Numerical(e.to_string()),
            SpectraError::Hamiltonian(h) => h.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<QpeStatsError> for CliError {
    fn from(e: QpeStatsError) -> Self {
        match e {
            QpeStatsError::Spectra(s) => s.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<LeakageError> for CliError {
    fn from(e: LeakageError) -> Self {
        match e {
            LeakageError::DigitsCapExceeded => CliError::Numerical(e.to_string()),
            LeakageError::QpeStats(q) => q.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<RefineError> for CliError {
    fn from(e: RefineError) -> Self {
        match e {
            RefineError::PosteriorUndefined | RefineError::DegenerateWindow => CliError::Numerical(e.to_string()),
            RefineError::Spectra(s) => s.into(),
            RefineError::Leakage(l) => l.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "qprep", version, about = "Initial-state preparation toolkit for quantum phase estimation")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (falls back to QPREP_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Indented JSON and aligned CSV.
    #[arg(long, global = true)]
    pub pretty: bool,
    /// File of `key = value` lines mirroring long flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compress determinant strings to distinct GF(2) signatures.
    Compress(CompressArgs),
    /// Toffoli and qubit counts swept over D or χ, as CSV.
    EstimateCost(EstimateCostArgs),
    /// Hamiltonian construction and inspection.
    #[command(subcommand)]
    Ham(HamCommand),
    /// Convert between SOS JSON and the MPS binary container.
    Convert(ConvertArgs),
    /// Simulate the SOS or MPS preparation circuit and report fidelity.
    SimulateEncode(SimulateEncodeArgs),
    /// Energy distribution on a grid, as `E,P` CSV.
    EnergyDist(EnergyDistArgs),
    /// QPE outcome statistics of a spectral measure.
    QpeStats(QpeStatsArgs),
    /// Easy / Goldilocks / Hard classification.
    Goldilocks(GoldilocksArgs),
    /// Leakage probability: exact sum, approximation, integral and diagnosis.
    Leakage(LeakageArgs),
    /// Coarse-QPE post-selection, QETU filtering or the Gaussian case study.
    #[command(subcommand)]
    Refine(RefineCommand),
    /// Run the acceptance criteria.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug)]
pub struct CompressArgs {
    /// SOS state JSON.
    #[arg(long, value_name = "FILE", conflicts_with = "bits")]
    pub sos: Option<PathBuf>,
    /// Text file with one `0`/`1` string per line.
    #[arg(long, value_name = "FILE")]
    pub bits: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CostKind {
    Sos,
    Mps,
}

#[derive(Args, Debug)]
pub struct EstimateCostArgs {
    #[arg(long, value_enum, default_value = "sos")]
    pub kind: CostKind,
    /// Spatial orbitals (SOS sweep).
    #[arg(long, default_value_t = 100)]
    pub n: u128,
    /// Smallest D, rounded up to a power of two.
    #[arg(long, default_value_t = 2)]
    pub d_min: u128,
    /// Largest D.
    #[arg(long, default_value_t = 1 << 20)]
    pub d_max: u128,
    /// MPS sites.
    #[arg(long, default_value_t = 10)]
    pub sites: usize,
    /// MPS local dimension.
    #[arg(long, default_value_t = 4)]
    pub local_dim: u128,
    /// Bits per rotation angle.
    #[arg(long, default_value_t = 10)]
    pub angle_bits: u128,
    #[arg(long, default_value_t = 1)]
    pub chi_min: u128,
    #[arg(long, default_value_t = 1024)]
    pub chi_max: u128,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum HamCommand {
    /// Full-CI matrix of one (n_alpha, n_beta) sector from an FCIDUMP file.
    Build(HamBuildArgs),
    /// Dimension and spectral range of a stored matrix.
    Info(HamInfoArgs),
}

#[derive(Args, Debug)]
pub struct HamBuildArgs {
    #[arg(long, value_name = "FILE")]
    pub fcidump: PathBuf,
    #[arg(long)]
    pub na: usize,
    #[arg(long)]
    pub nb: usize,
    /// Output matrix; `.csv` selects CSV, anything else the binary container.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DIMENSION_CAP)]
    pub cap: usize,
}

#[derive(Args, Debug)]
pub struct HamInfoArgs {
    #[arg(long, value_name = "FILE")]
    pub ham: PathBuf,
}

#[derive(Args, Debug)]
pub struct ConvertArgs {
    /// `.json` is read as SOS, anything else as an MPS container.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub local_dim: usize,
    #[arg(long, default_value_t = 64)]
    pub chi_max: usize,
    /// Amplitude magnitude below which MPS→SOS expansion prunes.
    #[arg(long, default_value_t = 1e-12)]
    pub threshold: f64,
    #[arg(long, default_value_t = 1 << 16)]
    pub term_cap: usize,
}

#[derive(Args, Debug)]
pub struct SimulateEncodeArgs {
    #[arg(long, value_name = "FILE", conflicts_with = "mps")]
    pub sos: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub mps: Option<PathBuf>,
    /// Use the Householder-reflection form of each site unitary.
    #[arg(long)]
    pub householder: bool,
    #[arg(long, default_value_t = SimulationBudget::default().max_system_qubits)]
    pub max_qubits: usize,
    #[arg(long, default_value_t = SimulationBudget::default().max_determinants)]
    pub max_dets: usize,
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

/// Where the spectral measure comes from: exactly one of `--measure`,
/// `--gaussian`, or a Hamiltonian (`--fcidump`/`--ham`) with `--state`.
#[derive(Args, Debug, Clone)]
pub struct MeasureArgs {
    /// Spectral measure JSON as written by `--posterior-out`.
    #[arg(long, value_name = "FILE")]
    pub measure: Option<PathBuf>,
    /// Discretized Gaussian `MEAN,SIGMA` over ±6σ.
    #[arg(long, value_name = "MEAN,SIGMA", value_parser = parse_pair)]
    pub gaussian: Option<(f64, f64)>,
    #[arg(long, default_value_t = 4096)]
    pub bins: usize,
    #[arg(long, value_name = "FILE", conflicts_with = "ham")]
    pub fcidump: Option<PathBuf>,
    #[arg(long, requires = "fcidump")]
    pub na: Option<usize>,
    #[arg(long, requires = "fcidump")]
    pub nb: Option<usize>,
    /// Stored dense matrix (binary or `.csv`).
    #[arg(long, value_name = "FILE")]
    pub ham: Option<PathBuf>,
    /// SOS JSON (with `--fcidump`) or amplitude CSV with `re[,im]` per line.
    #[arg(long, value_name = "FILE")]
    pub state: Option<PathBuf>,
    /// Spectrum is mapped into `[margin, 1 − margin]`.
    #[arg(long, default_value_t = 0.05)]
    pub margin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DistMethod {
    Series,
    Resolvent,
    Cqpe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SeriesKind {
    GramCharlier,
    Edgeworth,
}

#[derive(Args, Debug)]
pub struct EnergyDistArgs {
    #[arg(long, value_enum)]
    pub method: DistMethod,
    #[command(flatten)]
    pub source: MeasureArgs,
    #[arg(long, default_value_t = -0.05, allow_negative_numbers = true)]
    pub e_min: f64,
    #[arg(long, default_value_t = 1.05)]
    pub e_max: f64,
    #[arg(long, default_value_t = 512)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "gram-charlier")]
    pub series: SeriesKind,
    /// Hermite truncation order (Gram–Charlier) or s_max (Edgeworth).
    #[arg(long, default_value_t = 6)]
    pub order: usize,
    /// Lorentzian half-width for the resolvent.
    #[arg(long, default_value_t = 0.01)]
    pub eta: f64,
    /// Solve the real positive-definite system instead of the complex one.
    #[arg(long)]
    pub real: bool,
    #[arg(long, default_value_t = 6)]
    pub k: u32,
    #[arg(long, default_value_t = 1000)]
    pub shots: usize,
    /// KDE bandwidth; defaults to 2^-k.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// JSON sidecar with moments, cumulants or sampling metadata.
    #[arg(long, value_name = "FILE")]
    pub sidecar: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct QpeStatsArgs {
    #[command(flatten)]
    pub source: MeasureArgs,
    #[arg(long, default_value_t = 6)]
    pub k: u32,
    /// Repetition counts K for min-of-K statistics.
    #[arg(long, value_delimiter = ',', default_value = "1,5,20")]
    pub reps: Vec<u32>,
    /// Include the full outcome table.
    #[arg(long)]
    pub outcomes: bool,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GoldilocksArgs {
    #[command(flatten)]
    pub source: MeasureArgs,
    /// Target energy E_T.
    #[arg(long, allow_negative_numbers = true)]
    pub et: f64,
    /// Repetition budget K.
    #[arg(long)]
    pub budget: u64,
    #[arg(long, default_value_t = DEFAULT_EASY_THRESHOLD)]
    pub easy_threshold: f64,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LeakageArgs {
    #[command(flatten)]
    pub source: MeasureArgs,
    #[arg(long, default_value_t = 10)]
    pub k: u32,
    #[arg(long, default_value_t = 2f64.powi(-8))]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.0)]
    pub e0: f64,
    /// Levels at or below this energy are not counted as leaking (default E0 + ε).
    #[arg(long, allow_negative_numbers = true)]
    pub exclusion: Option<f64>,
    /// Repetitions used by the CDF diagnosis.
    #[arg(long, default_value_t = 1000)]
    pub reps: u64,
    #[arg(long, default_value_t = DEFAULT_RISK_FACTOR)]
    pub factor: f64,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum RefineCommand {
    /// Keep the state when a k-digit QPE returns an accepted outcome.
    Cqpe(CqpeArgs),
    /// Even polynomial filter over an energy window.
    Qetu(QetuArgs),
    /// Gaussian case study with all twelve reference comparisons.
    CaseStudy(CaseStudyArgs),
}

#[derive(Args, Debug)]
pub struct RefineOutput {
    /// Energy at which the low-energy fraction is reported.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub e0: f64,
    /// Write the posterior measure JSON here.
    #[arg(long, value_name = "FILE")]
    pub posterior_out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CqpeArgs {
    #[command(flatten)]
    pub source: MeasureArgs,
    #[arg(long)]
    pub k: u32,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub accept: Vec<u64>,
    #[command(flatten)]
    pub output: RefineOutput,
}

#[derive(Args, Debug)]
pub struct QetuArgs {
    #[command(flatten)]
    pub source: MeasureArgs,
    /// Lower window edge in normalized energy.
    #[arg(long)]
    pub el: f64,
    /// Upper window edge in normalized energy.
    #[arg(long)]
    pub eu: f64,
    #[arg(long, default_value_t = 200)]
    pub degree: usize,
    #[arg(long, default_value_t = 1.0)]
    pub zeta: f64,
    /// Phase margin η in θ = −π + η + (π − 2η)E.
    #[arg(long, default_value_t = 0.0)]
    pub frame_eta: f64,
    #[command(flatten)]
    pub output: RefineOutput,
}

#[derive(Args, Debug)]
pub struct CaseStudyArgs {
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    /// Criterion numbers to run (default all).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u32>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected two comma-separated numbers, got {s:?}"))?;
    let a = a.trim().parse().map_err(|_| format!("bad number {a:?}"))?;
    let b = b.trim().parse().map_err(|_| format!("bad number {b:?}"))?;
    Ok((a, b))
}

struct Ctx {
    seed: u64,
    pretty: bool,
}

impl Ctx {
    fn emit(&self, out: Option<&Path>, text: &str) -> Result<(), CliError> {
        match out {
            Some(p) => fs::write(p, text)?,
            None => {
                let mut w = std::io::stdout().lock();
                let written = w.write_all(text.as_bytes()).and_then(|_| {
                    if text.ends_with('\n') {
                        Ok(())
                    } else {
                        w.write_all(b"\n")
                    }
                });
                match written {
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn json<T: Serialize>(&self, value: &T) -> Result<String, CliError> {
        Ok(if self.pretty { serde_json::to_string_pretty(value)? } else { serde_json::to_string(value)? })
    }

    fn emit_json<T: Serialize>(&self, out: Option<&Path>, value: &T) -> Result<(), CliError> {
        let text = self.json(value)?;
        self.emit(out, &text)
    }

    fn emit_csv(&self, out: Option<&Path>, csv: &str) -> Result<(), CliError> {
        if self.pretty {
            self.emit(out, &align_csv(csv))
        } else {
            self.emit(out, csv)
        }
    }
}

fn align_csv(csv: &str) -> String {
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r.iter().enumerate().map(|(c, s)| format!("{s:>w$}", w = widths[c])).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn read_text(p: &Path) -> Result<String, CliError> {
    fs::read_to_string(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
}

fn is_json(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn is_csv(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn read_sos(p: &Path) -> Result<SosState, CliError> {
    Ok(read_sos_json(&read_text(p)?)?)
}

fn read_mps(p: &Path) -> Result<MpsState, CliError> {
    let f = fs::File::open(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
    Ok(read_mps_binary(&mut BufReader::new(f))?)
}

fn read_hamiltonian(p: &Path) -> Result<DenseHamiltonian, CliError> {
    if is_csv(p) {
        Ok(read_dense_csv(&read_text(p)?)?)
    } else {
        let f = fs::File::open(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
        Ok(read_dense_binary(&mut BufReader::new(f))?)
    }
}

fn read_vector(p: &Path) -> Result<CVec, CliError> {
    let text = read_text(p)?;
    let mut amps = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let num = |s: &str| {
            s.parse::<f64>().map_err(|_| CliError::Input(format!("{}: line {}: bad number {s:?}", p.display(), i + 1)))
        };
        let amp = match cells.as_slice() {
            [re] => C64::new(num(re)?, 0.0),
            [re, im] => C64::new(num(re)?, num(im)?),
            _ => return Err(CliError::Input(format!("{}: line {}: expected re[,im]", p.display(), i + 1))),
        };
        amps.push(amp);
    }
    Ok(CVec::from_vec(amps))
}

/// The Hamiltonian and state named by `--fcidump`/`--ham` with `--state`.
fn load_system(a: &MeasureArgs) -> Result<Option<(DenseHamiltonian, CVec)>, CliError> {
    let h = match (&a.fcidump, &a.ham) {
        (Some(f), _) => {
            let fd = parse_fcidump(&read_text(f)?)?;
            let (na, nb) = match (a.na, a.nb) {
                (Some(na), Some(nb)) => (na, nb),
                _ => {
                    let up = (fd.n_elec as i64 + fd.ms2) / 2;
                    (up as usize, (fd.n_elec as i64 - up) as usize)
                }
            };
            build_ci_matrix_with_cap(&fd, na, nb, DEFAULT_DIMENSION_CAP)?
        }
        (None, Some(p)) => read_hamiltonian(p)?,
        (None, None) => return Ok(None),
    };
    let state = a.state.as_ref().ok_or_else(|| CliError::Usage("a Hamiltonian source needs --state".into()))?;
    let psi = if is_json(state) { h.embed_state(&read_sos(state)?)? } else { read_vector(state)? };
    Ok(Some((h, psi)))
}

fn read_measure(p: &Path) -> Result<SpectralMeasure, CliError> {
    let m: SpectralMeasure = serde_json::from_str(&read_text(p)?)?;
    Ok(SpectralMeasure::new(m.levels().to_vec(), m.normalizer())?)
}

enum Source {
    Measure(SpectralMeasure),
    Gaussian { mean: f64, sigma: f64, measure: SpectralMeasure },
    System { h: DenseHamiltonian, psi: CVec, measure: SpectralMeasure },
}

impl Source {
    fn measure(&self) -> &SpectralMeasure {
        match self {
            Source::Measure(m) | Source::Gaussian { measure: m, .. } | Source::System { measure: m, .. } => m,
        }
    }
}

fn load_source(a: &MeasureArgs) -> Result<Source, CliError> {
    let given = [a.measure.is_some(), a.gaussian.is_some(), a.fcidump.is_some() || a.ham.is_some()];
    if given.iter().filter(|&&g| g).count() != 1 {
        return Err(CliError::Usage(
            "give exactly one of --measure, --gaussian, or --fcidump/--ham with --state".into(),
        ));
    }
    if let Some(p) = &a.measure {
        return Ok(Source::Measure(read_measure(p)?));
    }
    if let Some((mean, sigma)) = a.gaussian {
        let measure = SpectralMeasure::discretized_gaussian(mean, sigma, a.bins, 6.0)?;
        return Ok(Source::Gaussian { mean, sigma, measure });
    }
    let (h, psi) = load_system(a)?.expect("a Hamiltonian source was given");
    let (hn, measure) = normalized_spectral_measure(&h, &psi, a.margin)?;
    Ok(Source::System { h: hn, psi, measure })
}

fn cmd_compress(ctx: &Ctx, a: &CompressArgs) -> Result<(), CliError> {
    let dets: Vec<Gf2Vec> = match (&a.sos, &a.bits) {
        (Some(p), _) => read_sos(p)?.occupations(),
        (None, Some(p)) => read_text(p)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(Gf2Vec::parse_bits)
            .collect::<Result<_, _>>()?,
        (None, None) => return Err(CliError::Usage("compress needs --sos or --bits".into())),
    };
    let (map, stats) = compress_with_stats(&dets)?;
    ctx.emit_json(a.out.as_deref(), &json!({ "signature_map": map, "stats": stats }))
}

fn cmd_estimate_cost(ctx: &Ctx, a: &EstimateCostArgs) -> Result<(), CliError> {
    let rows = match a.kind {
        CostKind::Sos => {
            if a.d_min > a.d_max {
                return Err(CliError::Input("--d-min exceeds --d-max".into()));
            }
            sos_cost_sweep(a.n, &power_of_two_range(a.d_min, a.d_max))
        }
        CostKind::Mps => {
            if a.sites == 0 || a.local_dim < 2 || a.chi_min > a.chi_max {
                return Err(CliError::Input("need --sites ≥ 1, --local-dim ≥ 2 and --chi-min ≤ --chi-max".into()));
            }
            mps_cost_sweep(a.sites, a.local_dim, a.angle_bits, &power_of_two_range(a.chi_min, a.chi_max))
        }
    };
    ctx.emit_csv(a.out.as_deref(), &sweep_to_csv(&rows))
}

fn spectral_range(h: &DenseHamiltonian) -> (f64, f64) {
    let ev = h.eigenvalues();
    (ev[0], ev[ev.len() - 1])
}

fn cmd_ham(ctx: &Ctx, c: &HamCommand) -> Result<(), CliError> {
    match c {
        HamCommand::Build(a) => {
            let fd = parse_fcidump(&read_text(&a.fcidump)?)?;
            let h = build_ci_matrix_with_cap(&fd, a.na, a.nb, a.cap)?;
            if is_csv(&a.out) {
                fs::write(&a.out, write_dense_csv(&h))?;
            } else {
                let mut w = BufWriter::new(fs::File::create(&a.out)?);
                write_dense_binary(&h, &mut w)?;
                w.flush()?;
            }
            let (lo, hi) = spectral_range(&h);
            ctx.emit_json(
                None,
                &json!({ "dim": h.dim(), "n_orb": fd.n_orb, "n_alpha": a.na, "n_beta": a.nb, "e_min": lo, "e_max": hi,
                         "output": a.out.display().to_string() }),
            )
        }
        HamCommand::Info(a) => {
            let h = read_hamiltonian(&a.ham)?;
            let (lo, hi) = spectral_range(&h);
            ctx.emit_json(None, &json!({ "dim": h.dim(), "e_min": lo, "e_max": hi }))
        }
    }
}

fn cmd_convert(ctx: &Ctx, a: &ConvertArgs) -> Result<(), CliError> {
    match (is_json(&a.input), is_json(&a.output)) {
        (true, false) => {
            let s = read_sos(&a.input)?;
            let opts = SosToMpsOptions { local_dim: a.local_dim, chi_max: a.chi_max, ..SosToMpsOptions::default() };
            let (m, fidelity) = sos_to_mps(&s, opts)?;
            let mut w = BufWriter::new(fs::File::create(&a.output)?);
            write_mps_binary(&m, &mut w)?;
            w.flush()?;
            ctx.emit_json(None, &json!({ "direction": "sos_to_mps", "fidelity": fidelity, "bond_dims": m.bond_dims() }))
        }
        (false, true) => {
            let m = read_mps(&a.input)?;
            let s = mps_to_sos(&m, a.threshold, a.term_cap)?;
            fs::write(&a.output, write_sos_json(&s, ctx.pretty)?)?;
            ctx.emit_json(None, &json!({ "direction": "mps_to_sos", "terms": s.len(), "norm": s.norm() }))
        }
        _ => Err(CliError::Usage("convert needs one .json (SOS) side and one MPS container side".into())),
    }
}

fn cmd_simulate_encode(ctx: &Ctx, a: &SimulateEncodeArgs) -> Result<(), CliError> {
    let value = match (&a.sos, &a.mps) {
        (Some(p), _) => {
            let budget = SimulationBudget { max_system_qubits: a.max_qubits, max_determinants: a.max_dets };
            let (_, rep) = simulate_sos_encoding(&read_sos(p)?, budget)?;
            json!({ "circuit": "sos", "report": rep })
        }
        (None, Some(p)) => {
            let m = read_mps(p)?;
            let (_, rep) = if a.householder { simulate_mps_circuit_householder(&m)? } else { simulate_mps_circuit(&m)? };
            json!({ "circuit": if a.householder { "mps_householder" } else { "mps" }, "report": rep })
        }
        (None, None) => return Err(CliError::Usage("simulate-encode needs --sos or --mps".into())),
    };
    ctx.emit_json(a.report.as_deref(), &value)
}

fn grid_csv(grid: &Grid, p: &[f64]) -> String {
    let mut out = String::from("E,P\n");
    for (e, v) in grid.points.iter().zip(p) {
        out.push_str(&format!("{e:.10e},{v:.10e}\n"));
    }
    out
}

fn cmd_energy_dist(ctx: &Ctx, a: &EnergyDistArgs) -> Result<(), CliError> {
    if !(a.e_max > a.e_min) || a.points < 2 {
        return Err(CliError::Input("need --e-max > --e-min and --points ≥ 2".into()));
    }
    let grid = Grid::uniform(a.e_min, a.e_max, a.points);
    let source = load_source(&a.source)?;
    let (values, sidecar) = match a.method {
        DistMethod::Series => {
            let n_moments = match a.series {
                SeriesKind::GramCharlier => a.order,
                SeriesKind::Edgeworth => a.order + 2,
            };
            let ms = match &source {
                Source::System { h, psi, .. } => moments(h, psi, n_moments)?,
                other => MomentSet::from_measure(other.measure(), n_moments),
            };
            let values: Vec<f64> = match a.series {
                SeriesKind::GramCharlier => {
                    let s = gram_charlier(&ms, a.order, a.order > crate::spectra::TABLE_MAX_ORDER)?;
                    grid.points.iter().map(|&e| s.eval(e)).collect()
                }
                SeriesKind::Edgeworth => {
                    let s = edgeworth(&ms, a.order)?;
                    grid.points.iter().map(|&e| s.eval(e)).collect()
                }
            };
            (values, json!({ "method": "series", "series": format!("{:?}", a.series), "order": a.order, "moments": ms }))
        }
        DistMethod::Resolvent => {
            let Source::System { h, psi, measure } = &source else {
                return Err(CliError::Usage("the resolvent method needs --fcidump or --ham with --state".into()));
            };
            let values = if a.real {
                resolvent_distribution_real(h, psi, a.eta, &grid)?
            } else {
                resolvent_distribution(h, psi, a.eta, &grid)?
            };
            (values, json!({ "method": "resolvent", "eta": a.eta, "real": a.real, "normalizer": measure.normalizer() }))
        }
        DistMethod::Cqpe => {
            let samples = coarse_qpe_sample(source.measure(), a.k, a.shots, ctx.seed)?;
            let h = a.bandwidth.unwrap_or(2f64.powi(-(a.k as i32)));
            let values = kde(&samples, Bandwidth::Fixed(h), &grid.points)?;
            (
                values,
                json!({ "method": "cqpe", "k": a.k, "shots": a.shots, "seed": ctx.seed, "bandwidth": h }),
            )
        }
    };
    if let Some(p) = &a.sidecar {
        fs::write(p, ctx.json(&sidecar)?)?;
    }
    ctx.emit_csv(a.out.as_deref(), &grid_csv(&grid, &values))
}

fn cmd_qpe_stats(ctx: &Ctx, a: &QpeStatsArgs) -> Result<(), CliError> {
    let source = load_source(&a.source)?;
    let m = source.measure();
    let dist = qpe_outcome_distribution(m, a.k)?;
    let outcomes = dist.as_measure()?;
    let mut min_stats = Vec::new();
    for &k in &a.reps {
        if k == 0 {
            return Err(CliError::Input("repetition counts must be positive".into()));
        }
        min_stats.push(json!({ "reps": k, "expected_min_energy": expected_min(m, k)?, "expected_min_outcome": expected_min(&outcomes, k)? }));
    }
    let mut value = json!({
        "k": a.k,
        "levels": m.len(),
        "mean": m.mean(),
        "outcome_mean": outcomes.mean(),
        "wasserstein1": wasserstein1(m, &outcomes),
        "min_of_k": min_stats,
    });
    if a.outcomes {
        value["outcome_probs"] = json!(dist.probs);
    }
    ctx.emit_json(a.out.as_deref(), &value)
}

fn cmd_goldilocks(ctx: &Ctx, a: &GoldilocksArgs) -> Result<(), CliError> {
    let source = load_source(&a.source)?;
    ctx.emit_json(a.out.as_deref(), &goldilocks_report(source.measure(), a.et, a.budget, a.easy_threshold))
}

fn gaussian_pdf(mean: f64, sigma: f64, e: f64) -> f64 {
    let z = (e - mean) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

fn cmd_leakage(ctx: &Ctx, a: &LeakageArgs) -> Result<(), CliError> {
    let source = load_source(&a.source)?;
    let m = source.measure();
    let mut setup = LeakageSetup::new(a.k, a.epsilon, a.e0)?;
    if let Some(t) = a.exclusion {
        setup = setup.with_exclusion_threshold(t);
    }
    let integral = match &source {
        Source::Gaussian { mean, sigma, .. } => {
            let (mean, sigma) = (*mean, *sigma);
            Some(leak_prob_integral(|e| gaussian_pdf(mean, sigma, e), mean + 6.0 * sigma, &setup))
        }
        _ => None,
    };
    let diagnosis = diagnose_leakage(m, a.k, a.reps, a.factor, &Grid::default())?;
    ctx.emit_json(
        a.out.as_deref(),
        &json!({
            "setup": setup,
            "x_upper": setup.x_upper(),
            "exact": leak_prob_exact(m, &setup),
            "approx": leak_prob_approx(m, &setup),
            "integral": integral,
            "diagnosis": diagnosis,
        }),
    )
}

fn refine_summary(ctx: &Ctx, before: &SpectralMeasure, r: &RefineResult, o: &RefineOutput) -> Result<(), CliError> {
    if let Some(p) = &o.posterior_out {
        fs::write(p, ctx.json(&r.posterior)?)?;
    }
    ctx.emit_json(
        o.out.as_deref(),
        &json!({
            "success_prob": r.success_prob,
            "query_cost": r.query_cost,
            "e0": o.e0,
            "p_below_e0_before": before.cdf_below(o.e0),
            "p_below_e0_after": r.posterior.cdf_below(o.e0),
            "mean_before": before.mean(),
            "mean_after": r.posterior.mean(),
        }),
    )
}

fn cmd_refine(ctx: &Ctx, c: &RefineCommand) -> Result<(), CliError> {
    match c {
        RefineCommand::Cqpe(a) => {
            let source = load_source(&a.source)?;
            let r = coarse_qpe_postselect(source.measure(), a.k, &a.accept)?;
            refine_summary(ctx, source.measure(), &r, &a.output)
        }
        RefineCommand::Qetu(a) => {
            let source = load_source(&a.source)?;
            let frame = QetuFrame { eta: a.frame_eta };
            let params = qetu_params(frame.theta(a.el), frame.theta(a.eu), a.zeta)?;
            let poly = symmetric_filter(params.k_steep, params.mu, a.degree)?;
            let r = qetu_filter(source.measure(), &poly, frame)?;
            refine_summary(ctx, source.measure(), &r, &a.output)
        }
        RefineCommand::CaseStudy(a) => {
            let report = gaussian_case_study(&CaseStudyConfig::default())?;
            ctx.emit_json(a.out.as_deref(), &report)
        }
    }
}

fn cmd_reproduce(ctx: &Ctx, a: &ReproduceArgs) -> Result<(), CliError> {
    let ids: Vec<u32> = if a.only.is_empty() { CRITERION_IDS.collect() } else { a.only.clone() };
    let mut outcomes = Vec::new();
    for id in ids {
        let o = run_criterion(id, ctx.seed).ok_or_else(|| CliError::Input(format!("no criterion {id}")))?;
        if ctx.pretty {
            eprintln!("{}", o.line());
        }
        outcomes.push(o);
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    let rows: Vec<_> = outcomes
        .iter()
        .map(|o| json!({ "id": o.id, "name": o.name, "pass": o.pass, "detail": o.detail, "seconds": o.elapsed.as_secs_f64() }))
        .collect();
    ctx.emit_json(a.out.as_deref(), &json!({ "seed": ctx.seed, "criteria": rows, "failed": failed }))?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("criteria {failed:?} failed")))
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("QPREP_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| CliError::Usage(format!("QPREP_THREADS={v:?} is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        // A pool already built in this process keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads(cli.threads)?;
    let ctx = Ctx { seed: cli.seed, pretty: cli.pretty };
    match &cli.command {
        Command::Compress(a) => cmd_compress(&ctx, a),
        Command::EstimateCost(a) => cmd_estimate_cost(&ctx, a),
        Command::Ham(c) => cmd_ham(&ctx, c),
        Command::Convert(a) => cmd_convert(&ctx, a),
        Command::SimulateEncode(a) => cmd_simulate_encode(&ctx, a),
        Command::EnergyDist(a) => cmd_energy_dist(&ctx, a),
        Command::QpeStats(a) => cmd_qpe_stats(&ctx, a),
        Command::Goldilocks(a) => cmd_goldilocks(&ctx, a),
        Command::Leakage(a) => cmd_leakage(&ctx, a),
        Command::Refine(c) => cmd_refine(&ctx, c),
        Command::Reproduce(a) => cmd_reproduce(&ctx, a),
    }
}

/// Parses `args` (program name first), merges any config file, runs the command.
pub fn dispatch(args: Vec<OsString>) -> ExitCode {
    let args = match config_path(&args) {
        Some(path) => match fs::read_to_string(&path).map_err(CliError::from).and_then(|t| parse_config(&t)) {
            Ok(entries) => merge_config(args, &entries),
            Err(e) => {
                eprintln!("error: config {path}: {e}");
                return ExitCode::from(e.exit_code());
            }
        },
        None => args,
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
