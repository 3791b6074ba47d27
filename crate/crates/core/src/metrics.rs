//! Gaussian steering, Reid products, PPT entanglement and regime
//! classification for two-mode covariance matrices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::covariance::{two_mode_invariant_roots, TwoModeCovariance};
use crate::error::{Error, Result};

/// Threshold below which a steerability (nats) or `1 - ppt` counts as zero.
pub const ZERO_THRESHOLD: f64 = 1e-9;

/// Steering direction. `AToB` means Alice steers Bob, so the conditioning
/// party's block is `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    AToB,
    BToA,
}

impl Direction {
    pub fn reversed(self) -> Direction {
        match self {
            Direction::AToB => Direction::BToA,
            Direction::BToA => Direction::AToB,
        }
    }

    fn steering_block_det(self, sigma: &TwoModeCovariance) -> f64 {
        match self {
            Direction::AToB => sigma.det_a(),
            Direction::BToA => sigma.det_b(),
        }
    }
}

fn positive_det(sigma: &TwoModeCovariance) -> Result<f64> {
    let det = sigma.determinant();
    if det.is_nan() || det <= 0.0 {
        return Err(Error::InvalidState(format!(
            "det σ = {det} is not positive"
        )));
    }
    Ok(det)
}

fn positive_block_det(sigma: &TwoModeCovariance, dir: Direction) -> Result<f64> {
    let det = dir.steering_block_det(sigma);
    if det.is_nan() || det <= 0.0 {
        return Err(Error::InvalidState(format!(
            "degenerate steering block for {dir:?}: det = {det}"
        )));
    }
    Ok(det)
}

/// Unclamped `½ ln(det X / det σ)` with `X` the steering party's block.
/// Changes sign exactly where steerability appears or vanishes.
pub fn steering_log_ratio(sigma: &TwoModeCovariance, dir: Direction) -> Result<f64> {
    let det = positive_det(sigma)?;
    let block = positive_block_det(sigma, dir)?;
    Ok(0.5 * (block / det).ln())
}

/// Gaussian steerability (nats) in the given direction.
pub fn steering(sigma: &TwoModeCovariance, dir: Direction) -> Result<f64> {
    let det = positive_det(sigma)?;
    let block = positive_block_det(sigma, dir)?;
    Ok(if block > det {
        0.5 * (block / det).ln()
    } else {
        0.0
    })
}

pub fn steering_ab(sigma: &TwoModeCovariance) -> Result<f64> {
    steering(sigma, Direction::AToB)
}

pub fn steering_ba(sigma: &TwoModeCovariance) -> Result<f64> {
    steering(sigma, Direction::BToA)
}

/// Product of the steered party's conditional variances,
/// `det σ / det X`. Values below 1 certify steering. Not clamped.
pub fn reid_product(sigma: &TwoModeCovariance, dir: Direction) -> Result<f64> {
    let det = positive_det(sigma)?;
    let block = positive_block_det(sigma, dir)?;
    Ok(det / block)
}

/// Smallest symplectic eigenvalue of the partially transposed state.
/// Values below 1 certify entanglement.
pub fn ppt_value(sigma: &TwoModeCovariance) -> Result<f64> {
    let det = positive_det(sigma)?;
    let gamma = sigma.det_a() + sigma.det_b() - 2.0 * sigma.det_c();
    let (lo, _) = two_mode_invariant_roots(gamma, det)?;
    Ok(lo.sqrt())
}

/// Correlation regime of a two-mode state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    TwoWay,
    OneWayAtoB,
    OneWayBtoA,
    EntangledUnsteerable,
    Separable,
}

impl Classification {
    pub const ALL: [Classification; 5] = [
        Classification::TwoWay,
        Classification::OneWayAtoB,
        Classification::OneWayBtoA,
        Classification::EntangledUnsteerable,
        Classification::Separable,
    ];

    /// Applies the zero threshold to precomputed metric values.
    pub fn from_values(g_ab: f64, g_ba: f64, ppt: f64) -> Classification {
        match (g_ab > ZERO_THRESHOLD, g_ba > ZERO_THRESHOLD) {
            (true, true) => Classification::TwoWay,
            (true, false) => Classification::OneWayAtoB,
            (false, true) => Classification::OneWayBtoA,
            (false, false) if ppt < 1.0 - ZERO_THRESHOLD => Classification::EntangledUnsteerable,
            (false, false) => Classification::Separable,
        }
    }

    pub fn is_steerable(self) -> bool {
        matches!(
            self,
            Classification::TwoWay | Classification::OneWayAtoB | Classification::OneWayBtoA
        )
    }

    pub fn is_entangled(self) -> bool {
        self != Classification::Separable
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::TwoWay => "twoway",
            Classification::OneWayAtoB => "onewayatob",
            Classification::OneWayBtoA => "onewaybtoa",
            Classification::EntangledUnsteerable => "entangledunsteerable",
            Classification::Separable => "separable",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Classification {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Classification::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown regime {s:?}")))
    }
}

pub fn classify(sigma: &TwoModeCovariance) -> Result<Classification> {
    Ok(Classification::from_values(
        steering_ab(sigma)?,
        steering_ba(sigma)?,
        ppt_value(sigma)?,
    ))
}

/// All correlation measures of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringReport {
    pub g_ab: f64,
    pub g_ba: f64,
    pub reid_ab: f64,
    pub reid_ba: f64,
    #[serde(rename = "ppt")]
    pub ppt_value: f64,
    pub purity: f64,
    pub regime: Classification,
}

/// Computes every metric. Purity is reported as `1/√det σ` without the
/// uncertainty-bound check so that sample-estimated matrices still report.
pub fn full_report(sigma: &TwoModeCovariance) -> Result<SteeringReport> {
    let g_ab = steering_ab(sigma)?;
    let g_ba = steering_ba(sigma)?;
    let ppt = ppt_value(sigma)?;
    Ok(SteeringReport {
        g_ab,
        g_ba,
        reid_ab: reid_product(sigma, Direction::AToB)?,
        reid_ba: reid_product(sigma, Direction::BToA)?,
        ppt_value: ppt,
        purity: 1.0 / sigma.determinant().sqrt(),
        regime: Classification::from_values(g_ab, g_ba, ppt),
    })
}
