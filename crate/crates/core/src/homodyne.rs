//! Synthetic homodyne data and covariance reconstruction.
//!
//! Joint draws of `(x_A, p_A, x_B, p_B)` stand in for the six homodyne
//! settings. For a zero-mean Gaussian state the variances of the six derived
//! channels have the same distribution as if each had been measured
//! separately, which is all the reconstruction uses.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector4;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{check_physicality_with, TwoModeCovariance, RECONSTRUCTION_TOL};
use crate::error::{Error, Result};
use crate::metrics::{full_report, steering_log_ratio, Classification, Direction, SteeringReport};

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_TRIALS: usize = 3;

/// Stream used for phase-jitter angles, distinct from the quadrature draws.
const JITTER_STREAM: u64 = 1;

/// One homodyne observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    XA,
    PA,
    XB,
    PB,
    /// `x_A + x_B`
    XSum,
    /// `p_A − p_B`
    PDiff,
}

impl Observable {
    pub const ALL: [Observable; 6] = [
        Observable::XA,
        Observable::PA,
        Observable::XB,
        Observable::PB,
        Observable::XSum,
        Observable::PDiff,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Observable::XA => "xA",
            Observable::PA => "pA",
            Observable::XB => "xB",
            Observable::PB => "pB",
            Observable::XSum => "xA+xB",
            Observable::PDiff => "pA-pB",
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Observable::ALL
            .into_iter()
            .find(|o| o.label() == s)
            .ok_or_else(|| Error::Parse(format!("unknown observable {s:?}")))
    }
}

/// Index-aligned samples for a set of observables: entry `i` of every
/// channel comes from the same joint draw.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSamples {
    labels: Vec<Observable>,
    data: Vec<Vec<f64>>,
    seed: u64,
    n: usize,
}

impl QuadratureSamples {
    pub fn new(labels: Vec<Observable>, data: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        if labels.len() != data.len() {
            return Err(Error::InvalidMeasurement(format!(
                "{} labels for {} channels",
                labels.len(),
                data.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidMeasurement(format!(
                    "duplicate observable {l}"
                )));
            }
        }
        let n = data.first().map_or(0, Vec::len);
        if data.iter().any(|d| d.len() != n) {
            return Err(Error::InvalidMeasurement(
                "channels differ in length".into(),
            ));
        }
        if n < 2 {
            return Err(Error::InvalidMeasurement(format!(
                "need at least 2 samples, got {n}"
            )));
        }
        Ok(Self {
            labels,
            data,
            seed,
            n,
        })
    }

    pub fn labels(&self) -> &[Observable] {
        &self.labels
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, obs: Observable) -> Option<&[f64]> {
        self.labels
            .iter()
            .position(|&l| l == obs)
            .map(|i| self.data[i].as_slice())
    }

    fn require(&self, obs: Observable) -> Result<&[f64]> {
        self.get(obs)
            .ok_or_else(|| Error::IncompleteMeasurement(obs.label().to_string()))
    }

    /// CSV with header `label,index,value`, one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,index,value\n");
        for (label, values) in self.labels.iter().zip(&self.data) {
            for (i, v) in values.iter().enumerate() {
                out.push_str(&format!("{label},{i},{v}\n"));
            }
        }
        out
    }

    pub fn from_csv(text: &str, seed: u64) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "label,index,value" => {}
            other => return Err(Error::Parse(format!("bad samples header {other:?}"))),
        }
        let mut labels: Vec<Observable> = Vec::new();
        let mut data: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let fields: Vec<&str> = line.trim().split(',').collect();
            let [label, index, value] = fields[..] else {
                return Err(Error::Parse(format!(
                    "line {}: expected 3 fields",
                    lineno + 2
                )));
            };
            let obs: Observable = label.parse()?;
            let index: usize = index
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: bad index: {e}", lineno + 2)))?;
            let value: f64 = value
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: bad value: {e}", lineno + 2)))?;
            let slot = match labels.iter().position(|&l| l == obs) {
                Some(i) => i,
                None => {
                    labels.push(obs);
                    data.push(Vec::new());
                    labels.len() - 1
                }
            };
            if data[slot].len() != index {
                return Err(Error::Parse(format!(
                    "line {}: {obs} index {index} out of sequence",
                    lineno + 2
                )));
            }
            data[slot].push(value);
        }
        Self::new(labels, data, seed)
    }
}

fn from_joint(draws: &[Vector4<f64>], seed: u64) -> QuadratureSamples {
    let channel = |f: fn(&Vector4<f64>) -> f64| draws.iter().map(f).collect::<Vec<_>>();
    let data = vec![
        channel(|v| v[0]),
        channel(|v| v[1]),
        channel(|v| v[2]),
        channel(|v| v[3]),
        channel(|v| v[0] + v[2]),
        channel(|v| v[1] - v[3]),
    ];
    QuadratureSamples {
        labels: Observable::ALL.to_vec(),
        data,
        seed,
        n: draws.len(),
    }
}

/// Draws `n` zero-mean joint samples with covariance `sigma` through its
/// Cholesky factor. Deterministic for a given seed.
pub fn sample_state(sigma: &TwoModeCovariance, n: usize, seed: u64) -> Result<QuadratureSamples> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 samples, got {n}")));
    }
    let chol = sigma.matrix().cholesky().ok_or_else(|| {
        Error::InvalidState(
            "covariance matrix has no Cholesky factor (not positive definite)".into(),
        )
    })?;
    let l = chol.l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<Vector4<f64>> = (0..n)
        .map(|_| {
            let z = Vector4::from_fn(|_, _| StandardNormal.sample(&mut rng));
            l * z
        })
        .collect();
    Ok(from_joint(&draws, seed))
}

/// Rotates each sample's `(x_B, p_B)` pair by an independent Gaussian angle
/// with standard deviation `theta_std_deg` degrees, then rebuilds the sum and
/// difference channels.
pub fn phase_jitter(
    samples: &QuadratureSamples,
    theta_std_deg: f64,
    seed: u64,
) -> Result<QuadratureSamples> {
    if !theta_std_deg.is_finite() || theta_std_deg < 0.0 {
        return Err(Error::Domain(format!(
            "phase jitter must be finite and >= 0 degrees, got {theta_std_deg}"
        )));
    }
    if theta_std_deg == 0.0 {
        return Ok(samples.clone());
    }
    let xa = samples.require(Observable::XA)?;
    let pa = samples.require(Observable::PA)?;
    let xb = samples.require(Observable::XB)?;
    let pb = samples.require(Observable::PB)?;
    let angle =
        Normal::new(0.0, theta_std_deg.to_radians()).map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(JITTER_STREAM);
    let draws: Vec<Vector4<f64>> = (0..samples.len())
        .map(|i| {
            let (s, c) = angle.sample(&mut rng).sin_cos();
            Vector4::new(xa[i], pa[i], c * xb[i] + s * pb[i], -s * xb[i] + c * pb[i])
        })
        .collect();
    Ok(from_joint(&draws, samples.seed))
}

/// The six variances behind the partial reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub var_xa: f64,
    pub var_pa: f64,
    pub var_xb: f64,
    pub var_pb: f64,
    pub var_xa_plus_xb: f64,
    pub var_pa_minus_pb: f64,
}

impl MeasurementSet {
    pub fn new(
        var_xa: f64,
        var_pa: f64,
        var_xb: f64,
        var_pb: f64,
        var_xa_plus_xb: f64,
        var_pa_minus_pb: f64,
    ) -> Result<Self> {
        let m = Self {
            var_xa,
            var_pa,
            var_xb,
            var_pb,
            var_xa_plus_xb,
            var_pa_minus_pb,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("xA", self.var_xa),
            ("pA", self.var_pa),
            ("xB", self.var_xb),
            ("pB", self.var_pb),
            ("xA+xB", self.var_xa_plus_xb),
            ("pA-pB", self.var_pa_minus_pb),
        ];
        for (name, v) in named {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidMeasurement(format!(
                    "variance of {name} is {v}"
                )));
            }
        }
        let bound = |joint: f64, u: f64, v: f64, name: &str| {
            let lim = 2.0 * (u * v).sqrt();
            if (joint - u - v).abs() > lim * (1.0 + 1e-12) {
                Err(Error::InvalidMeasurement(format!(
                    "variance of {name} = {joint} incompatible with its parts ({u}, {v})"
                )))
            } else {
                Ok(())
            }
        };
        bound(self.var_xa_plus_xb, self.var_xa, self.var_xb, "xA+xB")?;
        bound(self.var_pa_minus_pb, self.var_pa, self.var_pb, "pA-pB")
    }

    /// Exact variances implied by a covariance matrix.
    pub fn from_covariance(sigma: &TwoModeCovariance) -> Self {
        let s = |i, j| sigma.get(i, j);
        Self {
            var_xa: s(0, 0),
            var_pa: s(1, 1),
            var_xb: s(2, 2),
            var_pb: s(3, 3),
            var_xa_plus_xb: s(0, 0) + s(2, 2) + 2.0 * s(0, 2),
            var_pa_minus_pb: s(1, 1) + s(3, 3) - 2.0 * s(1, 3),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("measurement set serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }
}

fn unbiased_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

pub fn measure_variances(samples: &QuadratureSamples) -> Result<MeasurementSet> {
    let var = |o| samples.require(o).map(unbiased_variance);
    MeasurementSet::new(
        var(Observable::XA)?,
        var(Observable::PA)?,
        var(Observable::XB)?,
        var(Observable::PB)?,
        var(Observable::XSum)?,
        var(Observable::PDiff)?,
    )
}

/// Partial reconstruction from the six variances. Intra-mode and x-p cross
/// terms are set to zero. Warns (does not fail) when the estimate lies
/// noticeably below the uncertainty bound.
pub fn reconstruct_covariance(m: &MeasurementSet) -> Result<TwoModeCovariance> {
    m.validate()?;
    let cov_x = 0.5 * (m.var_xa_plus_xb - m.var_xa - m.var_xb);
    let cov_p = -0.5 * (m.var_pa_minus_pb - m.var_pa - m.var_pb);
    let sigma = TwoModeCovariance::from_rows([
        [m.var_xa, 0.0, cov_x, 0.0],
        [0.0, m.var_pa, 0.0, cov_p],
        [cov_x, 0.0, m.var_xb, 0.0],
        [0.0, cov_p, 0.0, m.var_pb],
    ])?;
    if let Some(msg) = check_physicality_with(&sigma, RECONSTRUCTION_TOL).diagnostic() {
        log::warn!("reconstructed covariance is unphysical: {msg}");
    }
    Ok(sigma)
}

/// How trial seeds are derived from the base seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedMode {
    /// Trial `i` uses `seed + i`.
    PerTrial,
    /// Every trial reuses `seed`.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionPlan {
    pub samples: usize,
    pub trials: usize,
    pub seed: u64,
    pub theta_std_deg: f64,
    pub seed_mode: SeedMode,
}

impl ReconstructionPlan {
    pub fn new(samples: usize, trials: usize, seed: u64) -> Self {
        Self {
            samples,
            trials,
            seed,
            theta_std_deg: 0.0,
            seed_mode: SeedMode::PerTrial,
        }
    }

    pub fn with_phase_jitter(mut self, theta_std_deg: f64) -> Self {
        self.theta_std_deg = theta_std_deg;
        self
    }

    pub fn with_seed_mode(mut self, mode: SeedMode) -> Self {
        self.seed_mode = mode;
        self
    }

    pub fn trial_seeds(&self) -> Vec<u64> {
        (0..self.trials as u64)
            .map(|i| match self.seed_mode {
                SeedMode::PerTrial => self.seed.wrapping_add(i),
                SeedMode::Shared => self.seed,
            })
            .collect()
    }
}

impl Default for ReconstructionPlan {
    fn default() -> Self {
        Self::new(DEFAULT_SAMPLES, DEFAULT_TRIALS, 0)
    }
}

/// Per-field spread of a set of reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSpread {
    pub g_ab: f64,
    pub g_ba: f64,
    pub reid_ab: f64,
    pub reid_ba: f64,
    pub ppt: f64,
    pub purity: f64,
}

/// Mean and standard deviation of the unclamped log-ratios, which stay
/// informative where the clamped steerabilities sit at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnclampedSteering {
    pub mean_ab: f64,
    pub std_ab: f64,
    pub mean_ba: f64,
    pub std_ba: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub trials: usize,
    pub samples_per_trial: usize,
    pub seeds: Vec<u64>,
    pub theta_std_deg: f64,
    pub mean_report: SteeringReport,
    pub std_report: MetricSpread,
    pub unclamped: UnclampedSteering,
    pub reports: Vec<SteeringReport>,
    pub matrices: Vec<TwoModeCovariance>,
    pub warnings: Vec<String>,
}

/// Mean and sample standard deviation. The mean is accumulated as an offset
/// from the first value so identical inputs give exactly zero spread.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let base = values[0];
    let mean = base + values.iter().map(|v| v - base).sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

struct Trial {
    sigma: TwoModeCovariance,
    report: SteeringReport,
    raw_ab: f64,
    raw_ba: f64,
    warning: Option<String>,
}

fn run_trial(sigma: &TwoModeCovariance, plan: &ReconstructionPlan, seed: u64) -> Result<Trial> {
    let mut samples = sample_state(sigma, plan.samples, seed)?;
    if plan.theta_std_deg > 0.0 {
        samples = phase_jitter(&samples, plan.theta_std_deg, seed)?;
    }
    let rec = reconstruct_covariance(&measure_variances(&samples)?)?;
    let warning = check_physicality_with(&rec, RECONSTRUCTION_TOL)
        .diagnostic()
        .map(|d| format!("trial seed {seed}: {d}"));
    Ok(Trial {
        report: full_report(&rec)?,
        raw_ab: steering_log_ratio(&rec, Direction::AToB)?,
        raw_ba: steering_log_ratio(&rec, Direction::BToA)?,
        sigma: rec,
        warning,
    })
}

/// Sample, reconstruct and report for each trial, then summarise.
pub fn reconstruct_trials(
    sigma: &TwoModeCovariance,
    plan: &ReconstructionPlan,
) -> Result<ReconstructionResult> {
    if plan.trials < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 trials, got {}",
            plan.trials
        )));
    }
    let seeds = plan.trial_seeds();
    let trials: Vec<Trial> = seeds
        .par_iter()
        .map(|&s| run_trial(sigma, plan, s))
        .collect::<Result<_>>()?;

    let field = |f: fn(&SteeringReport) -> f64| {
        mean_std(&trials.iter().map(|t| f(&t.report)).collect::<Vec<_>>())
    };
    let (g_ab, sd_g_ab) = field(|r| r.g_ab);
    let (g_ba, sd_g_ba) = field(|r| r.g_ba);
    let (reid_ab, sd_reid_ab) = field(|r| r.reid_ab);
    let (reid_ba, sd_reid_ba) = field(|r| r.reid_ba);
    let (ppt, sd_ppt) = field(|r| r.ppt_value);
    let (purity, sd_purity) = field(|r| r.purity);
    let (mean_ab, std_ab) = mean_std(&trials.iter().map(|t| t.raw_ab).collect::<Vec<_>>());
    let (mean_ba, std_ba) = mean_std(&trials.iter().map(|t| t.raw_ba).collect::<Vec<_>>());

    Ok(ReconstructionResult {
        trials: plan.trials,
        samples_per_trial: plan.samples,
        theta_std_deg: plan.theta_std_deg,
        mean_report: SteeringReport {
            g_ab,
            g_ba,
            reid_ab,
            reid_ba,
            ppt_value: ppt,
            purity,
            regime: Classification::from_values(g_ab, g_ba, ppt),
        },
        std_report: MetricSpread {
            g_ab: sd_g_ab,
            g_ba: sd_g_ba,
            reid_ab: sd_reid_ab,
            reid_ba: sd_reid_ba,
            ppt: sd_ppt,
            purity: sd_purity,
        },
        unclamped: UnclampedSteering {
            mean_ab,
            std_ab,
            mean_ba,
            std_ba,
        },
        reports: trials.iter().map(|t| t.report).collect(),
        matrices: trials.iter().map(|t| t.sigma).collect(),
        warnings: trials.iter().filter_map(|t| t.warning.clone()).collect(),
        seeds,
    })
}

/// [`reconstruct_trials`] with per-trial seeds `seed + i` and no phase jitter.
pub fn repeated_reconstruction(
    sigma: &TwoModeCovariance,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<ReconstructionResult> {
    reconstruct_trials(sigma, &ReconstructionPlan::new(n, trials, seed))
}
