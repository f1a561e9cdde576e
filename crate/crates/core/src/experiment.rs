//! Monte-Carlo SINR-versus-SNR study: configuration, trial execution,
//! aggregation, CSV output and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mimo_conic::SolverSettings;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::array::steering;
use crate::beamformers::{
    lsmi, regularize_covariance, smi, worst_case, BcdSettings, BeamError, ChanceModel, ProbabilisticDesign,
};
use crate::chance_bound::{tight_lower_bound, DualCertificate};
use crate::linalg::{kron, CVector, HermitianMatrix, C64};
use crate::mismatch::{estimate_covariance, GaussianSampler, MismatchSampler, RiceanSampler, RiceanSpec};
use crate::scenario::{
    linear_to_db, output_sinr_linear, sample_covariance, true_in_covariance, ScenarioConfig, SnapshotDraws,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("run failed: {0}")]
    Runtime(String),
}

impl ExperimentError {
    pub fn is_config(&self) -> bool {
        matches!(self, ExperimentError::Config(_) | ExperimentError::Parse(_))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Mean of linear SINR, then converted to dB.
    #[default]
    Linear,
    /// Mean of per-trial dB values.
    Db,
}

/// Covariance the designs see: the sample estimate or the exact one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceSource {
    #[default]
    Sample,
    True,
}

/// How the mismatch covariance handed to the probability-constrained
/// designs is derived from the reference (known or estimated) covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DesignCovariance {
    Full,
    #[default]
    Diagonal,
    Isotropic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum MismatchModel {
    None,
    /// Circular Gaussian with covariance `variance * I` on each side.
    Gaussian { variance: f64 },
    /// Scattered paths with total power `power_factor * M` per side.
    Ricean {
        power_factor: f64,
        paths: usize,
        halfwidth_deg: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MismatchConfig {
    #[serde(flatten)]
    pub model: MismatchModel,
    #[serde(default)]
    pub design_covariance: DesignCovariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodConfig {
    Smi,
    Lsmi {
        loading: f64,
    },
    WorstCase {
        epsilon: f64,
    },
    ProbGaussian {
        p: f64,
        eta1: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta2: Option<f64>,
    },
    ProbChebyshev {
        p: f64,
        eta1: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta2: Option<f64>,
    },
}

impl MethodConfig {
    pub fn name(&self) -> &'static str {
        match self {
            MethodConfig::Smi => "SMI",
            MethodConfig::Lsmi { .. } => "LSMI",
            MethodConfig::WorstCase { .. } => "WorstCase",
            MethodConfig::ProbGaussian { .. } => "ProbGaussian",
            MethodConfig::ProbChebyshev { .. } => "ProbChebyshev",
        }
    }

    /// `(model, p, eta1, eta2)` with `eta2 = p / eta1` when not given.
    fn probabilistic(&self) -> Option<(ChanceModel, f64, f64, f64)> {
        let (model, p, eta1, eta2) = match *self {
            MethodConfig::ProbGaussian { p, eta1, eta2 } => (ChanceModel::Gaussian, p, eta1, eta2),
            MethodConfig::ProbChebyshev { p, eta1, eta2 } => (ChanceModel::Chebyshev, p, eta1, eta2),
            _ => return None,
        };
        Some((model, p, eta1, eta2.unwrap_or(p / eta1)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub snr_db: Vec<f64>,
    #[serde(default = "default_estimation_draws")]
    pub covariance_estimation_draws: usize,
    #[serde(default)]
    pub averaging: Averaging,
    #[serde(default)]
    pub covariance_source: CovarianceSource,
    pub scenario: ScenarioConfig,
    pub mismatch: MismatchConfig,
    pub methods: Vec<MethodConfig>,
}

fn default_estimation_draws() -> usize {
    10_000
}

/// Parses an `lo:hi:step` range (inclusive of `hi` up to rounding).
pub fn parse_snr_range(s: &str) -> Result<Vec<f64>, ExperimentError> {
    let bad = || ExperimentError::Config(format!("SNR range {s:?} is not lo:hi:step"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [lo, hi, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || hi < lo || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| lo + step * k as f64).collect())
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    /// Keeps only the methods whose names (case-insensitive) are listed.
    pub fn filter_methods(&mut self, names: &[String]) -> Result<(), ExperimentError> {
        for n in names {
            if !self.methods.iter().any(|m| m.name().eq_ignore_ascii_case(n)) {
                return Err(ExperimentError::Config(format!("unknown method {n:?}")));
            }
        }
        self.methods.retain(|m| names.iter().any(|n| m.name().eq_ignore_ascii_case(n)));
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let err = |m: String| Err(ExperimentError::Config(m));
        let sc = &self.scenario;
        if self.trials == 0 {
            return err("trials must be at least 1".into());
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return err("snr_db must be a nonempty list of finite values".into());
        }
        if self.methods.is_empty() {
            return err("no methods selected".into());
        }
        if sc.snapshots == 0 {
            return err("scenario.snapshots must be at least 1".into());
        }
        if !sc.transmit.is_valid() || !sc.receive.is_valid() {
            return err("array geometry needs at least one element and positive spacing".into());
        }
        if !(sc.noise_power > 0.0) || !sc.noise_power.is_finite() {
            return err("scenario.noise_power must be positive".into());
        }
        let angles = std::iter::once(sc.target_angle_deg).chain(sc.interferers.iter().map(|i| i.angle_deg));
        for a in angles {
            if !(-90.0..=90.0).contains(&a) {
                return err(format!("angle {a} outside [-90, 90]"));
            }
        }
        if sc.interferers.iter().any(|i| !i.inr_db.is_finite()) {
            return err("interferer INR must be finite".into());
        }
        match self.mismatch.model {
            MismatchModel::None => {}
            MismatchModel::Gaussian { variance } => {
                if !(variance >= 0.0) {
                    return err("mismatch variance must be nonnegative".into());
                }
            }
            MismatchModel::Ricean {
                power_factor,
                paths,
                halfwidth_deg,
            } => {
                if !(power_factor >= 0.0) || paths == 0 || !(halfwidth_deg >= 0.0) {
                    return err("Ricean mismatch needs power_factor >= 0, paths >= 1, halfwidth_deg >= 0".into());
                }
                if self.covariance_estimation_draws == 0 {
                    return err("covariance_estimation_draws must be at least 1".into());
                }
            }
        }
        let mut names = Vec::new();
        for m in &self.methods {
            if names.contains(&m.name()) {
                return err(format!("method {} listed twice", m.name()));
            }
            names.push(m.name());
            match *m {
                MethodConfig::Lsmi { loading } if !(loading >= 0.0) => {
                    return err("LSMI loading must be nonnegative".into())
                }
                MethodConfig::WorstCase { epsilon } if !(epsilon >= 0.0) => {
                    return err("worst-case epsilon must be nonnegative".into())
                }
                _ => {}
            }
            if let Some((_, p, eta1, eta2)) = m.probabilistic() {
                for (label, v) in [("p", p), ("eta1", eta1), ("eta2", eta2)] {
                    if !(v > 0.0 && v < 1.0) {
                        return err(format!("{}: {label} = {v} must lie in (0, 1)", m.name()));
                    }
                }
                if (eta1 * eta2 - p).abs() > 1e-9 {
                    return err(format!("{}: eta1 * eta2 = {} differs from p = {p}", m.name(), eta1 * eta2));
                }
            }
        }
        Ok(())
    }
}

/// Random-stream purposes. A stream is keyed by `(trial << 8) | purpose`.
pub mod purpose {
    pub const MISMATCH: u64 = 1;
    pub const SNAPSHOTS: u64 = 2;
    pub const ESTIMATION: u64 = 3;
    pub const BOUND_DEMO: u64 = 4;
}

/// Counter-based stream for `(trial, purpose)` under the master seed.
pub fn stream(seed: u64, trial: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 8) | purpose);
    rng
}

/// Quantities shared by every trial.
struct Setup {
    a_t: CVector,
    a_r: CVector,
    d_nominal: CVector,
    interferers: Vec<CVector>,
    r_in: HermitianMatrix,
    sampler_t: Option<Box<dyn MismatchSampler>>,
    sampler_r: Option<Box<dyn MismatchSampler>>,
    design_t: HermitianMatrix,
    design_r: HermitianMatrix,
}

fn side_sampler(
    model: MismatchModel,
    geom: crate::array::ArrayGeometry,
    theta0: f64,
) -> Result<Option<Box<dyn MismatchSampler>>, ExperimentError> {
    let m = geom.elements;
    Ok(match model {
        MismatchModel::None => None,
        MismatchModel::Gaussian { variance } => Some(Box::new(
            GaussianSampler::new(&HermitianMatrix::identity(m).scaled(variance))
                .map_err(|e| ExperimentError::Runtime(e.to_string()))?,
        )),
        MismatchModel::Ricean {
            power_factor,
            paths,
            halfwidth_deg,
        } => Some(Box::new(RiceanSampler {
            spec: RiceanSpec {
                power: power_factor * m as f64,
                paths,
                halfwidth_deg,
                geometry: geom,
            },
            theta0_deg: theta0,
        })),
    })
}

fn reference_covariance(
    cfg: &ExperimentConfig,
    sampler: &Option<Box<dyn MismatchSampler>>,
    m: usize,
    side: u64,
) -> Result<HermitianMatrix, ExperimentError> {
    let c = match (cfg.mismatch.model, sampler) {
        (MismatchModel::None, _) | (_, None) => HermitianMatrix::zeros(m),
        (MismatchModel::Gaussian { variance }, _) => HermitianMatrix::identity(m).scaled(variance),
        (MismatchModel::Ricean { .. }, Some(s)) => {
            let mut rng = stream(cfg.seed, side, purpose::ESTIMATION);
            let draws: Vec<CVector> = (0..cfg.covariance_estimation_draws).map(|_| s.draw(&mut rng)).collect();
            estimate_covariance(&draws).map_err(|e| ExperimentError::Runtime(e.to_string()))?
        }
    };
    Ok(match cfg.mismatch.design_covariance {
        DesignCovariance::Full => c,
        DesignCovariance::Diagonal => c.diagonal_part(),
        DesignCovariance::Isotropic => HermitianMatrix::identity(m).scaled(c.trace() / m as f64),
    })
}

impl Setup {
    fn new(cfg: &ExperimentConfig) -> Result<Self, ExperimentError> {
        let sc = &cfg.scenario;
        let a_t = steering(&sc.transmit, sc.target_angle_deg).response;
        let a_r = steering(&sc.receive, sc.target_angle_deg).response;
        let interferers = sc.interferer_steering();
        let sampler_t = side_sampler(cfg.mismatch.model, sc.transmit, sc.target_angle_deg)?;
        let sampler_r = side_sampler(cfg.mismatch.model, sc.receive, sc.target_angle_deg)?;
        let design_t = reference_covariance(cfg, &sampler_t, sc.transmit.elements, 0)?;
        let design_r = reference_covariance(cfg, &sampler_r, sc.receive.elements, 1)?;
        Ok(Setup {
            d_nominal: kron(&a_t, &a_r),
            r_in: true_in_covariance(sc, &interferers),
            a_t,
            a_r,
            interferers,
            sampler_t,
            sampler_r,
            design_t,
            design_r,
        })
    }

    /// Actual (mismatched) target virtual steering vector of one trial.
    fn actual_target(&self, seed: u64, trial: u64) -> CVector {
        let mut rng = stream(seed, trial, purpose::MISMATCH);
        let mut draw = |s: &Option<Box<dyn MismatchSampler>>, a: &CVector| match s {
            Some(s) => a + s.draw(&mut rng),
            None => a.clone(),
        };
        let at = draw(&self.sampler_t, &self.a_t);
        let ar = draw(&self.sampler_r, &self.a_r);
        kron(&at, &ar)
    }
}

/// Outcome of one method in one trial at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodOutcome {
    /// Linear output SINR.
    Sinr(f64),
    Failed(String),
}

fn design(
    method: &MethodConfig,
    setup: &Setup,
    r: &HermitianMatrix,
    solver: &SolverSettings,
) -> Result<CVector, BeamError> {
    let w = match *method {
        MethodConfig::Smi => smi(r, &setup.d_nominal)?.w,
        MethodConfig::Lsmi { loading } => lsmi(r, &setup.d_nominal, loading)?.w,
        MethodConfig::WorstCase { epsilon } => worst_case(r, &setup.d_nominal, epsilon, solver)?.w,
        _ => {
            let (model, _, eta1, eta2) = method.probabilistic().expect("probabilistic method");
            let des = ProbabilisticDesign { model, eta1, eta2 };
            let settings = BcdSettings {
                solver: solver.clone(),
                ..BcdSettings::default()
            };
            des.design(r, &setup.a_t, &setup.a_r, &setup.design_t, &setup.design_r, &settings)?
                .weights
                .w
        }
    };
    Ok(w)
}

/// Runs one trial: outcomes indexed `[snr][method]`.
fn run_trial(cfg: &ExperimentConfig, setup: &Setup, trial: u64) -> Vec<Vec<MethodOutcome>> {
    let sc = &cfg.scenario;
    let d = setup.actual_target(cfg.seed, trial);
    let draws = SnapshotDraws::draw(sc, &mut stream(cfg.seed, trial, purpose::SNAPSHOTS));
    let solver = SolverSettings::default();
    cfg.snr_db
        .iter()
        .map(|&snr| {
            let power = sc.signal_power(snr);
            let r = match cfg.covariance_source {
                CovarianceSource::Sample => {
                    let s = draws
                        .assemble(sc, snr, &d, &setup.interferers)
                        .expect("steering dimensions follow the configuration");
                    regularize_covariance(&sample_covariance(&s))
                }
                CovarianceSource::True => {
                    let mut r = setup.r_in.matrix().clone();
                    if sc.signal_in_training {
                        r.gerc(C64::new(power, 0.0), &d, &d, C64::new(1.0, 0.0));
                    }
                    HermitianMatrix::symmetrize(r)
                }
            };
            cfg.methods
                .iter()
                .map(|m| match design(m, setup, &r, &solver) {
                    Ok(w) => match output_sinr_linear(&w, &d, power, &setup.r_in) {
                        Ok(s) if s.is_finite() => MethodOutcome::Sinr(s),
                        Ok(s) => MethodOutcome::Failed(format!("non-finite SINR {s}")),
                        Err(e) => MethodOutcome::Failed(e.to_string()),
                    },
                    Err(e) => MethodOutcome::Failed(e.to_string()),
                })
                .collect()
        })
        .collect()
}

/// Outcomes of a single trial, indexed `[snr][method]` in configuration
/// order. A trial's draws depend only on the seed and its index.
pub fn trial_outcomes(cfg: &ExperimentConfig, trial: u64) -> Result<Vec<Vec<MethodOutcome>>, ExperimentError> {
    cfg.validate()?;
    let setup = Setup::new(cfg)?;
    Ok(run_trial(cfg, &setup, trial))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub snr_db: f64,
    pub method: String,
    pub mean_sinr_db: f64,
    pub stderr_db: f64,
    pub trials_ok: usize,
    pub trials_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn get(&self, method: &str, snr_db: f64) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && (r.snr_db - snr_db).abs() < 1e-9)
    }

    /// Rows ordered by method name, then SNR.
    pub fn sorted(&self) -> Vec<ResultRow> {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.snr_db.total_cmp(&b.snr_db)));
        rows
    }
}

fn aggregate(values: &[f64], averaging: Averaging) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let sample: Vec<f64> = match averaging {
        Averaging::Linear => values.to_vec(),
        Averaging::Db => values.iter().map(|v| linear_to_db(*v)).collect(),
    };
    let mean = sample.iter().sum::<f64>() / nf;
    let se = if n > 1 {
        let var = sample.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
        (var / nf).sqrt()
    } else {
        f64::NAN
    };
    match averaging {
        Averaging::Linear => (linear_to_db(mean), 10.0 / std::f64::consts::LN_10 * se / mean),
        Averaging::Db => (mean, se),
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses the rayon default.
    pub jobs: usize,
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ResultTable, ExperimentError> {
    cfg.validate()?;
    let setup = Setup::new(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    let per_trial: Vec<Vec<Vec<MethodOutcome>>> = pool.install(|| {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(cfg, &setup, t))
            .collect()
    });

    let mut rows = Vec::new();
    for (si, &snr) in cfg.snr_db.iter().enumerate() {
        for (mi, m) in cfg.methods.iter().enumerate() {
            let values: Vec<f64> = per_trial
                .iter()
                .filter_map(|t| match t[si][mi] {
                    MethodOutcome::Sinr(s) => Some(s),
                    MethodOutcome::Failed(_) => None,
                })
                .collect();
            let (mean, se) = aggregate(&values, cfg.averaging);
            rows.push(ResultRow {
                snr_db: snr,
                method: m.name().to_string(),
                mean_sinr_db: mean,
                stderr_db: se,
                trials_ok: values.len(),
                trials_failed: cfg.trials - values.len(),
            });
        }
    }
    Ok(ResultTable { rows })
}

/// Formats `x` with six significant digits.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.00000".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // Rounding can carry into a new digit (e.g. 9.999996 -> 10.00000).
        let digits = s.chars().filter(|c| c.is_ascii_digit()).skip_while(|c| *c == '0').count();
        if digits > 6 && decimals > 0 {
            let d = decimals - 1;
            return format!("{x:.d$}");
        }
        s
    } else {
        format!("{x:.5e}")
    }
}

pub const CSV_HEADER: [&str; 6] = ["snr_db", "method", "mean_sinr_db", "stderr_db", "trials_ok", "trials_failed"];

pub fn csv_bytes(table: &ResultTable) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("writing to memory");
    for r in table.sorted() {
        w.write_record([
            format_sig6(r.snr_db),
            r.method.clone(),
            format_sig6(r.mean_sinr_db),
            format_sig6(r.stderr_db),
            r.trials_ok.to_string(),
            r.trials_failed.to_string(),
        ])
        .expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<(), ExperimentError> {
    if table.rows.is_empty() {
        return Err(ExperimentError::Runtime("result table is empty".into()));
    }
    std::fs::write(path, csv_bytes(table)).map_err(io_err(path))
}

pub fn read_csv(path: &Path) -> Result<ResultTable, ExperimentError> {
    let cerr = |source| ExperimentError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(cerr)?;
    let header = r.headers().map_err(cerr)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(ExperimentError::Runtime(format!("{}: unexpected header", path.display())));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(cerr)?;
        let bad = |field: &str| ExperimentError::Runtime(format!("{}: bad {field} in {rec:?}", path.display()));
        let num = |i: usize, name: &str| rec[i].parse::<f64>().map_err(|_| bad(name));
        let int = |i: usize, name: &str| rec[i].parse::<usize>().map_err(|_| bad(name));
        rows.push(ResultRow {
            snr_db: num(0, "snr_db")?,
            method: rec[1].to_string(),
            mean_sinr_db: num(2, "mean_sinr_db")?,
            stderr_db: num(3, "stderr_db")?,
            trials_ok: int(4, "trials_ok")?,
            trials_failed: int(5, "trials_failed")?,
        });
    }
    Ok(ResultTable { rows })
}

/// Git-style content hash: SHA-256 of `"blob <len>\0" + bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

/// Key-value manifest recording the resolved configuration and hashes.
pub fn manifest_text(cfg: &ExperimentConfig, csv_path: &Path, csv: &[u8]) -> String {
    let config = cfg.to_toml_string();
    let mut out = String::new();
    let _ = writeln!(out, "tool = \"mimo-rab {}\"", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "csv = {:?}", csv_path.display().to_string());
    let _ = writeln!(out, "csv_hash = \"{}\"", content_hash(csv));
    let _ = writeln!(out, "config_hash = \"{}\"", content_hash(config.as_bytes()));
    let _ = writeln!(out, "\n[config]");
    for line in config.lines() {
        // Re-root every table under [config].
        if let Some(rest) = line.strip_prefix("[[") {
            let _ = writeln!(out, "[[config.{rest}");
        } else if let Some(rest) = line.strip_prefix('[') {
            let _ = writeln!(out, "[config.{rest}");
        } else {
            let _ = writeln!(out, "{line}");
        }
    }
    out
}

pub fn write_manifest(cfg: &ExperimentConfig, csv_path: &Path, csv: &[u8], path: &Path) -> Result<(), ExperimentError> {
    std::fs::write(path, manifest_text(cfg, csv_path, csv)).map_err(io_err(path))
}

/// Certificates for both sides of one probability-constrained design.
#[derive(Debug, Clone)]
pub struct BoundDemo {
    pub method: String,
    pub snr_db: f64,
    pub eta: (f64, f64),
    pub transmit: DualCertificate,
    pub receive: DualCertificate,
}

/// Designs each probability-constrained method on trial 0 at the highest
/// configured SNR and computes the moment-based lower bound for each side.
pub fn bound_demo(cfg: &ExperimentConfig) -> Result<Vec<BoundDemo>, ExperimentError> {
    cfg.validate()?;
    let setup = Setup::new(cfg)?;
    let sc = &cfg.scenario;
    let snr = cfg.snr_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let d = setup.actual_target(cfg.seed, 0);
    let draws = SnapshotDraws::draw(sc, &mut stream(cfg.seed, 0, purpose::BOUND_DEMO));
    let s = draws
        .assemble(sc, snr, &d, &setup.interferers)
        .map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    let r = regularize_covariance(&sample_covariance(&s));
    let solver = SolverSettings::default();
    let mut out = Vec::new();
    for m in &cfg.methods {
        let Some((model, _, eta1, eta2)) = m.probabilistic() else {
            continue;
        };
        let outcome = ProbabilisticDesign { model, eta1, eta2 }
            .design(&r, &setup.a_t, &setup.a_r, &setup.design_t, &setup.design_r, &BcdSettings::default())
            .map_err(|e| ExperimentError::Runtime(format!("{}: {e}", m.name())))?;
        let w = outcome.weights;
        let (u, v) = (w.u.expect("Kronecker design"), w.v.expect("Kronecker design"));
        let bound = |x: &CVector, a: &CVector, c: &HermitianMatrix| {
            tight_lower_bound(x, a, c, &solver).map_err(|e| ExperimentError::Runtime(format!("{}: {e}", m.name())))
        };
        out.push(BoundDemo {
            method: m.name().to_string(),
            snr_db: snr,
            eta: (eta1, eta2),
            transmit: bound(&u, &setup.a_t, &setup.design_t)?,
            receive: bound(&v, &setup.a_r, &setup.design_r)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(20.0), "20.0000");
        assert_eq!(format_sig6(-10.0), "-10.0000");
        assert_eq!(format_sig6(0.0), "0.00000");
        assert_eq!(format_sig6(0.0123456789), "0.0123457");
        assert_eq!(format_sig6(123456789.0), "1.23457e8");
        assert_eq!(format_sig6(9.9999996), "10.0000");
        assert_eq!(format_sig6(f64::NAN), "NaN");
    }

    #[test]
    fn snr_range_parsing() {
        assert_eq!(parse_snr_range("0:30:10").unwrap(), vec![0.0, 10.0, 20.0, 30.0]);
        assert_eq!(parse_snr_range("-10:30:5").unwrap().len(), 9);
        assert!(parse_snr_range("0:30").is_err());
        assert!(parse_snr_range("0:30:0").is_err());
        assert!(parse_snr_range("5:0:1").is_err());
    }

    #[test]
    fn streams_are_disjoint_and_stable() {
        use rand::RngCore;
        let a = stream(7, 3, purpose::MISMATCH).next_u64();
        let b = stream(7, 3, purpose::SNAPSHOTS).next_u64();
        let c = stream(7, 4, purpose::MISMATCH).next_u64();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, stream(7, 3, purpose::MISMATCH).next_u64());
    }

    #[test]
    fn hash_is_git_style() {
        // printf 'blob 0\0' | sha256sum
        assert_eq!(
            content_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }
}
