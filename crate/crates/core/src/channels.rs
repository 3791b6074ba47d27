//! Bosonic channel maps acting on mode B.
//!
//! Every map keeps the form `B → s·B + n·I`, `C → √s·C`, `A → A`, with a
//! transmission `s` and an added isotropic variance `n`:
//!
//! | channel | `s`  | `n` |
//! |---------|------|-----|
//! | lossy   | η    | 1 − η |
//! | noisy   | η    | (1 − η)(g + 1) |
//! | revival | ηT   | (√((1−η)gT) − √((1−T)g_an))² + (1−η)T + (1−T) |
//!
//! The revival row is the variance of the beam-splitter output
//! `√(ηT)B + (√((1−η)gT) − √((1−T)g_an))N + √((1−η)T)v − √(1−T)c` with the
//! channel noise `N`, the loss vacuum `v` and the ancilla `c` independent and
//! of unit variance. The two `N` amplitudes cancel when
//! `g/g_an = (1−T)/((1−η)T)`; the map then reduces to pure loss at `ηT`.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::covariance::{check_physicality, TwoModeCovariance};
use crate::error::{Error, Result};

/// Ancilla noise setting for the correlated-noise channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelatedNoise {
    /// Chosen to cancel the channel noise exactly.
    Matched,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelSpec {
    Lossy {
        eta: f64,
    },
    Noisy {
        eta: f64,
        g: f64,
    },
    Revival {
        eta: f64,
        g: f64,
        t: f64,
        g_an: CorrelatedNoise,
    },
}

impl ChannelSpec {
    pub fn eta(&self) -> f64 {
        match *self {
            ChannelSpec::Lossy { eta }
            | ChannelSpec::Noisy { eta, .. }
            | ChannelSpec::Revival { eta, .. } => eta,
        }
    }

    /// Channel excess noise; zero for a lossy channel.
    pub fn noise(&self) -> f64 {
        match *self {
            ChannelSpec::Lossy { .. } => 0.0,
            ChannelSpec::Noisy { g, .. } | ChannelSpec::Revival { g, .. } => g,
        }
    }

    pub fn with_eta(self, eta: f64) -> ChannelSpec {
        match self {
            ChannelSpec::Lossy { .. } => ChannelSpec::Lossy { eta },
            ChannelSpec::Noisy { g, .. } => ChannelSpec::Noisy { eta, g },
            ChannelSpec::Revival { g, t, g_an, .. } => ChannelSpec::Revival { eta, g, t, g_an },
        }
    }

    /// Replaces the excess noise. A lossy channel becomes noisy.
    pub fn with_noise(self, g: f64) -> ChannelSpec {
        match self {
            ChannelSpec::Lossy { eta } | ChannelSpec::Noisy { eta, .. } => {
                ChannelSpec::Noisy { eta, g }
            }
            ChannelSpec::Revival { eta, t, g_an, .. } => ChannelSpec::Revival { eta, g, t, g_an },
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_eta(self.eta())?;
        match *self {
            ChannelSpec::Lossy { .. } => Ok(()),
            ChannelSpec::Noisy { g, .. } => check_noise("g", g),
            ChannelSpec::Revival { g, t, g_an, .. } => {
                check_noise("g", g)?;
                check_revival_t(t)?;
                if let CorrelatedNoise::Fixed(v) = g_an {
                    check_noise("g_an", v)?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ChannelSpec::Lossy { eta } => write!(f, "lossy:eta={eta}"),
            ChannelSpec::Noisy { eta, g } => write!(f, "noisy:eta={eta},g={g}"),
            ChannelSpec::Revival { eta, g, t, g_an } => {
                write!(f, "revival:eta={eta},g={g},T={t},gan=")?;
                match g_an {
                    CorrelatedNoise::Matched => f.write_str("auto"),
                    CorrelatedNoise::Fixed(v) => write!(f, "{v}"),
                }
            }
        }
    }
}

impl FromStr for ChannelSpec {
    type Err = Error;

    /// Parses `lossy:eta=0.5`, `noisy:eta=0.6,g=5` or
    /// `revival:eta=0.6,g=5,T=0.9,gan=auto`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, params) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("channel {s:?} lacks a ':' separator")))?;
        let mut eta = None;
        let mut g = None;
        let mut t = None;
        let mut g_an = None;
        for pair in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {pair:?}")))?;
            let num = || {
                value
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad value for {key}: {value:?} ({e})")))
            };
            match key.trim() {
                "eta" => eta = Some(num()?),
                "g" => g = Some(num()?),
                "T" | "t" => t = Some(num()?),
                "gan" | "g_an" => {
                    g_an = Some(if value.trim() == "auto" {
                        CorrelatedNoise::Matched
                    } else {
                        CorrelatedNoise::Fixed(num()?)
                    })
                }
                other => return Err(Error::Parse(format!("unknown channel parameter {other:?}"))),
            }
        }
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Parse(format!("{kind} channel requires {name}")))
        };
        let spec = match kind.trim() {
            "lossy" => ChannelSpec::Lossy {
                eta: need(eta, "eta")?,
            },
            "noisy" => ChannelSpec::Noisy {
                eta: need(eta, "eta")?,
                g: need(g, "g")?,
            },
            "revival" => ChannelSpec::Revival {
                eta: need(eta, "eta")?,
                g: need(g, "g")?,
                t: need(t, "T")?,
                g_an: g_an.unwrap_or(CorrelatedNoise::Matched),
            },
            other => return Err(Error::Parse(format!("unknown channel kind {other:?}"))),
        };
        let stray = match spec {
            ChannelSpec::Lossy { .. } => g.is_some() || t.is_some() || g_an.is_some(),
            ChannelSpec::Noisy { .. } => t.is_some() || g_an.is_some(),
            ChannelSpec::Revival { .. } => false,
        };
        if stray {
            return Err(Error::Parse(format!(
                "parameters not accepted by {kind}: {params:?}"
            )));
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "transmission eta must lie in [0, 1], got {eta}"
        )))
    }
}

fn check_noise(name: &str, g: f64) -> Result<()> {
    if g >= 0.0 && g.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be finite and >= 0, got {g}"
        )))
    }
}

fn check_revival_t(t: f64) -> Result<()> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "revival transmission T must lie in (0, 1], got {t}"
        )))
    }
}

/// `B → s·B + n·I`, `C → √s·C`.
fn attenuate_b(sigma: &TwoModeCovariance, s: f64, n: f64) -> TwoModeCovariance {
    TwoModeCovariance::from_blocks(
        sigma.block_a(),
        sigma.block_b() * s + Matrix2::identity() * n,
        sigma.block_c() * s.sqrt(),
    )
    .expect("attenuation preserves symmetry")
}

pub fn apply_lossy(sigma: &TwoModeCovariance, eta: f64) -> Result<TwoModeCovariance> {
    check_eta(eta)?;
    Ok(attenuate_b(sigma, eta, 1.0 - eta))
}

pub fn apply_noisy(sigma: &TwoModeCovariance, eta: f64, g: f64) -> Result<TwoModeCovariance> {
    check_eta(eta)?;
    check_noise("g", g)?;
    Ok(attenuate_b(sigma, eta, (1.0 - eta) * (g + 1.0)))
}

/// Ratio `g/g_an` that cancels the channel noise on the revival
/// beam splitter: `(1−T)/((1−η)T)`.
pub fn revival_ratio(eta: f64, t: f64) -> Result<f64> {
    check_eta(eta)?;
    if eta == 1.0 {
        return Err(Error::Domain(
            "eta = 1 leaves no channel noise to cancel".to_string(),
        ));
    }
    check_revival_t(t)?;
    Ok((1.0 - t) / ((1.0 - eta) * t))
}

/// Ancilla noise `g_an` satisfying the matching condition.
pub fn matched_correlated_noise(eta: f64, g: f64, t: f64) -> Result<f64> {
    check_noise("g", g)?;
    revival_ratio(eta, t)?;
    if g == 0.0 {
        return Ok(0.0);
    }
    if t == 1.0 {
        return Err(Error::Domain(
            "T = 1 couples no ancilla, channel noise cannot be cancelled".to_string(),
        ));
    }
    Ok(g * (1.0 - eta) * t / (1.0 - t))
}

/// Variance left on mode B by imperfect cancellation of the channel noise.
pub fn revival_residual_noise(eta: f64, g: f64, t: f64, g_an: f64) -> f64 {
    let d = ((1.0 - eta) * g * t).sqrt() - ((1.0 - t) * g_an).sqrt();
    d * d
}

pub fn apply_revival(
    sigma: &TwoModeCovariance,
    eta: f64,
    g: f64,
    t: f64,
    g_an: f64,
) -> Result<TwoModeCovariance> {
    check_eta(eta)?;
    check_noise("g", g)?;
    check_revival_t(t)?;
    check_noise("g_an", g_an)?;
    let residual = revival_residual_noise(eta, g, t, g_an);
    if residual > (1.0 - eta) * g {
        log::warn!(
            "revival residual noise {residual:.6} exceeds channel excess noise {:.6}",
            (1.0 - eta) * g
        );
    }
    let noise = residual + (1.0 - eta) * t + (1.0 - t);
    Ok(attenuate_b(sigma, eta * t, noise))
}

fn apply_unchecked(sigma: &TwoModeCovariance, spec: &ChannelSpec) -> Result<TwoModeCovariance> {
    match *spec {
        ChannelSpec::Lossy { eta } => apply_lossy(sigma, eta),
        ChannelSpec::Noisy { eta, g } => apply_noisy(sigma, eta, g),
        ChannelSpec::Revival { eta, g, t, g_an } => {
            let g_an = match g_an {
                CorrelatedNoise::Matched => matched_correlated_noise(eta, g, t)?,
                CorrelatedNoise::Fixed(v) => v,
            };
            apply_revival(sigma, eta, g, t, g_an)
        }
    }
}

/// Applies `spec` to mode B and checks the output against the uncertainty
/// bound. An unphysical output from a physical input is an error.
pub fn apply_channel(sigma: &TwoModeCovariance, spec: &ChannelSpec) -> Result<TwoModeCovariance> {
    spec.validate()?;
    let out = apply_unchecked(sigma, spec)?;
    let check = check_physicality(&out);
    if !check.physical {
        let msg = check.diagnostic().unwrap_or_default();
        if check_physicality(sigma).physical {
            return Err(Error::InvalidState(format!(
                "channel {spec} produced {msg}"
            )));
        }
        log::warn!("unphysical input propagated through {spec}: {msg}");
    }
    Ok(out)
}

/// Applies `spec` to mode A instead of mode B.
pub fn apply_channel_to_a(
    sigma: &TwoModeCovariance,
    spec: &ChannelSpec,
) -> Result<TwoModeCovariance> {
    Ok(apply_channel(&sigma.swap_modes(), spec)?.swap_modes())
}
