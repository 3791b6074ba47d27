//! Parameter sweeps, bisection of regime boundaries, region maps and
//! steering surfaces.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{apply_channel, ChannelSpec};
use crate::covariance::{build_tmss, TmssSpec, TwoModeCovariance};
use crate::error::{Error, Result};
use crate::metrics::{
    classify, full_report, ppt_value, steering_log_ratio, Classification, Direction,
};

pub const DEFAULT_POINTS: usize = 201;
pub const DEFAULT_BISECTION_TOL: f64 = 1e-6;
const MAX_BISECTION_ITERS: usize = 200;

/// The parameter varied along a sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Channel transmission η.
    Eta,
    /// Channel excess noise g. Turns a lossy channel into a noisy one.
    Noise,
    /// Initial-state purity, realised through the anti-squeezing excess δ.
    Purity,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eta" => Ok(SweepAxis::Eta),
            "g" | "noise" => Ok(SweepAxis::Noise),
            "purity" | "mu" => Ok(SweepAxis::Purity),
            other => Err(Error::Parse(format!("unknown sweep axis {other:?}"))),
        }
    }
}

/// Evenly spaced closed interval `[min, max]` with `points` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl AxisRange {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        let r = Self { min, max, points };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.min.is_finite() || !self.max.is_finite() || self.min >= self.max {
            return Err(Error::Domain(format!(
                "axis range needs min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.points < 2 {
            return Err(Error::Domain(format!(
                "axis needs >= 2 points, got {}",
                self.points
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    /// Grid values; the last one is exactly `max`.
    pub fn values(&self) -> Vec<f64> {
        let step = self.step();
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.max
                } else {
                    self.min + step * i as f64
                }
            })
            .collect()
    }
}

/// A state and channel with one parameter left free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub state: TmssSpec,
    pub channel: ChannelSpec,
}

impl Scenario {
    pub fn new(state: TmssSpec, channel: ChannelSpec) -> Self {
        Self { state, channel }
    }

    /// Scenario with `axis` set to `value`.
    pub fn with(&self, axis: SweepAxis, value: f64) -> Result<Scenario> {
        Ok(match axis {
            SweepAxis::Eta => Scenario::new(self.state, self.channel.with_eta(value)),
            SweepAxis::Noise => Scenario::new(self.state, self.channel.with_noise(value)),
            SweepAxis::Purity => {
                Scenario::new(TmssSpec::with_purity(self.state.r(), value)?, self.channel)
            }
        })
    }

    pub fn output(&self) -> Result<TwoModeCovariance> {
        apply_channel(&build_tmss(&self.state), &self.channel)
    }

    pub fn output_at(&self, axis: SweepAxis, value: f64) -> Result<TwoModeCovariance> {
        self.with(axis, value)
            .and_then(|s| s.output())
            .map_err(|e| Error::at_axis(value, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub scenario: Scenario,
    pub axis: SweepAxis,
    pub range: AxisRange,
    pub second: Option<(SweepAxis, AxisRange)>,
}

impl SweepSpec {
    pub fn new(scenario: Scenario, axis: SweepAxis, range: AxisRange) -> Self {
        Self {
            scenario,
            axis,
            range,
            second: None,
        }
    }

    pub fn with_second(mut self, axis: SweepAxis, range: AxisRange) -> Self {
        self.second = Some((axis, range));
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.range.validate()?;
        if let Some((axis, range)) = &self.second {
            range.validate()?;
            if *axis == self.axis {
                return Err(Error::Domain(
                    "both sweep axes vary the same parameter".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One row of a 1D sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: f64,
    pub g_ab: f64,
    pub g_ba: f64,
    pub reid_ab: f64,
    pub reid_ba: f64,
    pub ppt: f64,
    pub purity: f64,
}

fn row_at(scenario: &Scenario, axis: SweepAxis, value: f64) -> Result<SweepRow> {
    let sigma = scenario.output_at(axis, value)?;
    let r = full_report(&sigma).map_err(|e| Error::at_axis(value, e))?;
    Ok(SweepRow {
        axis: value,
        g_ab: r.g_ab,
        g_ba: r.g_ba,
        reid_ab: r.reid_ab,
        reid_ba: r.reid_ba,
        ppt: r.ppt_value,
        purity: r.purity,
    })
}

/// Evaluates the primary axis only; `spec.second` is ignored.
pub fn sweep_1d(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.range.validate()?;
    spec.range
        .values()
        .par_iter()
        .map(|&v| row_at(&spec.scenario, spec.axis, v))
        .collect()
}

/// A row of a two-axis sweep; `second` is the outer (slow) index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub first: f64,
    pub second: f64,
    pub row: SweepRow,
}

pub fn sweep_grid(spec: &SweepSpec) -> Result<Vec<GridRow>> {
    spec.validate()?;
    let (axis2, range2) = spec
        .second
        .ok_or_else(|| Error::Domain("grid sweep needs a second axis".into()))?;
    let firsts = spec.range.values();
    range2
        .values()
        .par_iter()
        .flat_map_iter(|&v2| {
            let firsts = &firsts;
            firsts.iter().map(move |&v1| {
                let sc = spec
                    .scenario
                    .with(axis2, v2)
                    .map_err(|e| Error::at_axis(v2, e))?;
                Ok(GridRow {
                    first: v1,
                    second: v2,
                    row: row_at(&sc, spec.axis, v1)?,
                })
            })
        })
        .collect()
}

/// Which regime boundary to locate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryKind {
    #[serde(rename = "atob-death")]
    AtoBDeath,
    #[serde(rename = "btoa-death")]
    BtoADeath,
    #[serde(rename = "entanglement-death")]
    EntanglementDeath,
    #[serde(rename = "direction-crossover")]
    DirectionCrossover,
}

impl BoundaryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryKind::AtoBDeath => "atob-death",
            BoundaryKind::BtoADeath => "btoa-death",
            BoundaryKind::EntanglementDeath => "entanglement-death",
            BoundaryKind::DirectionCrossover => "direction-crossover",
        }
    }

    /// Signed function whose zero is the boundary: the unclamped steering
    /// log-ratios, `ppt − 1`, or `det A − det B`.
    pub fn defining_function(self, sigma: &TwoModeCovariance) -> Result<f64> {
        match self {
            BoundaryKind::AtoBDeath => steering_log_ratio(sigma, Direction::AToB),
            BoundaryKind::BtoADeath => steering_log_ratio(sigma, Direction::BToA),
            BoundaryKind::EntanglementDeath => Ok(ppt_value(sigma)? - 1.0),
            BoundaryKind::DirectionCrossover => Ok(sigma.det_a() - sigma.det_b()),
        }
    }

    /// Whether the property bounded by this curve holds at `c`. Undefined for
    /// the crossover, which separates two steering directions.
    fn holds(self, c: Classification) -> Option<bool> {
        match self {
            BoundaryKind::AtoBDeath => Some(matches!(
                c,
                Classification::TwoWay | Classification::OneWayAtoB
            )),
            BoundaryKind::BtoADeath => Some(matches!(
                c,
                Classification::TwoWay | Classification::OneWayBtoA
            )),
            BoundaryKind::EntanglementDeath => Some(c.is_entangled()),
            BoundaryKind::DirectionCrossover => None,
        }
    }
}

impl std::fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub value: f64,
    /// Half-width of the final bracket.
    pub tolerance: f64,
    pub iterations: usize,
}

/// Bisection on `[lo, hi]` to absolute tolerance `tol`.
pub fn bisect<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<Root>
where
    F: Fn(f64) -> Result<f64>,
{
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain(format!(
            "bisection tolerance must be > 0, got {tol}"
        )));
    }
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(Root {
            value: lo,
            tolerance: 0.0,
            iterations: 0,
        });
    }
    if f_hi == 0.0 {
        return Ok(Root {
            value: hi,
            tolerance: 0.0,
            iterations: 0,
        });
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    let mut iterations = 0;
    while 0.5 * (hi - lo) > tol && iterations < MAX_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        iterations += 1;
        if f_mid == 0.0 {
            return Ok(Root {
                value: mid,
                tolerance: 0.0,
                iterations,
            });
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Root {
        value: 0.5 * (lo + hi),
        tolerance: 0.5 * (hi - lo),
        iterations,
    })
}

/// Locates `kind` along `axis` of `scenario` within `bracket`.
pub fn find_boundary(
    kind: BoundaryKind,
    scenario: &Scenario,
    axis: SweepAxis,
    bracket: (f64, f64),
    tol: f64,
) -> Result<Root> {
    bisect(
        |v| {
            let sigma = scenario.output_at(axis, v)?;
            kind.defining_function(&sigma)
                .map_err(|e| Error::at_axis(v, e))
        },
        bracket.0,
        bracket.1,
        tol,
    )
}

/// Location where `det A = det B` under a noisy channel on mode B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverPoint {
    pub noise: f64,
    /// No squeezing: both steerabilities vanish identically.
    pub degenerate: bool,
}

/// `g* = α − 1`. Under a noisy channel `β = ηα + (1−η)(g+1)`, so
/// `α = β` does not depend on η.
pub fn find_crossover_impure(r: f64, delta: f64) -> Result<CrossoverPoint> {
    let spec = TmssSpec::new(r, delta)?;
    let degenerate = r == 0.0;
    if degenerate {
        log::warn!("crossover requested for an unsqueezed state; steering vanishes identically");
    }
    Ok(CrossoverPoint {
        noise: spec.alpha() - 1.0,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    /// Value of the held-fixed parameter for this slice.
    pub fixed: f64,
    pub root: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub kind: BoundaryKind,
    pub axis: SweepAxis,
    pub fixed_axis: SweepAxis,
    pub points: Vec<BoundaryPoint>,
    /// Largest bracket half-width over all points.
    pub tolerance: f64,
    /// Slices without a sign change in the bracket.
    pub skipped: Vec<f64>,
}

/// Traces `kind` along `axis` for each value of `fixed_axis`. Slices where
/// the bracket holds no sign change are listed in `skipped`.
pub fn boundary_curve(
    kind: BoundaryKind,
    scenario: &Scenario,
    axis: SweepAxis,
    fixed_axis: SweepAxis,
    fixed_values: &[f64],
    bracket: (f64, f64),
    tol: f64,
) -> Result<BoundaryCurve> {
    let results: Vec<(f64, Result<Root>)> = fixed_values
        .par_iter()
        .map(|&fixed| {
            let root = scenario
                .with(fixed_axis, fixed)
                .and_then(|sc| find_boundary(kind, &sc, axis, bracket, tol));
            (fixed, root)
        })
        .collect();
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    let mut tolerance: f64 = 0.0;
    for (fixed, res) in results {
        match res {
            Ok(root) => {
                tolerance = tolerance.max(root.tolerance);
                points.push(BoundaryPoint {
                    fixed,
                    root: root.value,
                });
            }
            Err(Error::Bracket { .. }) => skipped.push(fixed),
            Err(e) => return Err(Error::at_axis(fixed, e)),
        }
    }
    Ok(BoundaryCurve {
        kind,
        axis,
        fixed_axis,
        points,
        tolerance,
        skipped,
    })
}

/// Comparison of a bisected boundary with the transition seen on the grid
/// along one fixed-g slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceCheck {
    pub g: f64,
    pub kind: BoundaryKind,
    pub root: Option<f64>,
    /// First η on the grid where the property differs from the η.min cell.
    pub grid_transition: Option<f64>,
    pub consistent: bool,
}

/// Regime classification over an `(η, g)` grid of noisy channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMap {
    pub state: TmssSpec,
    pub etas: Vec<f64>,
    pub gs: Vec<f64>,
    /// Row-major with g as the slow index: `cells[j * etas.len() + i]`.
    pub cells: Vec<Classification>,
    pub slice_checks: Vec<SliceCheck>,
}

impl RegionMap {
    pub fn resolution(&self) -> (usize, usize) {
        (self.etas.len(), self.gs.len())
    }

    pub fn cell(&self, eta_index: usize, g_index: usize) -> Classification {
        self.cells[g_index * self.etas.len() + eta_index]
    }

    /// Cells in output order `(eta, g, regime)`, g varying slowest.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, Classification)> + '_ {
        self.gs.iter().enumerate().flat_map(move |(j, &g)| {
            self.etas
                .iter()
                .enumerate()
                .map(move |(i, &eta)| (eta, g, self.cell(i, j)))
        })
    }

    /// One fixed-g slice, ordered by η.
    pub fn slice(&self, g_index: usize) -> &[Classification] {
        let n = self.etas.len();
        &self.cells[g_index * n..(g_index + 1) * n]
    }
}

/// Number of g slices cross-checked against bisection.
const SLICE_CHECKS: usize = 5;

pub fn region_map_2d(state: &TmssSpec, eta: &AxisRange, g: &AxisRange) -> Result<RegionMap> {
    eta.validate()?;
    g.validate()?;
    let etas = eta.values();
    let gs = g.values();
    let base = Scenario::new(*state, ChannelSpec::Noisy { eta: 1.0, g: 0.0 });
    let cells: Vec<Classification> = gs
        .par_iter()
        .flat_map_iter(|&gv| {
            let etas = &etas;
            etas.iter().map(move |&ev| {
                let sigma =
                    Scenario::new(*state, ChannelSpec::Noisy { eta: ev, g: gv }).output()?;
                classify(&sigma)
            })
        })
        .collect::<Result<_>>()?;

    let mut map = RegionMap {
        state: *state,
        etas,
        gs,
        cells,
        slice_checks: Vec::new(),
    };
    let n_g = map.gs.len();
    let picks: Vec<usize> = (0..SLICE_CHECKS)
        .map(|k| k * (n_g - 1) / (SLICE_CHECKS - 1).max(1))
        .collect();
    let step = eta.step();
    for &j in &picks {
        let gv = map.gs[j];
        let slice_sc = base.with(SweepAxis::Noise, gv)?;
        for kind in [
            BoundaryKind::AtoBDeath,
            BoundaryKind::BtoADeath,
            BoundaryKind::EntanglementDeath,
        ] {
            let root = match find_boundary(
                kind,
                &slice_sc,
                SweepAxis::Eta,
                (eta.min, eta.max),
                DEFAULT_BISECTION_TOL,
            ) {
                Ok(r) => Some(r.value),
                Err(Error::Bracket { .. }) => None,
                Err(e) => return Err(e),
            };
            let slice = map.slice(j);
            let first = kind.holds(slice[0]);
            let grid_transition = slice
                .iter()
                .position(|&c| kind.holds(c) != first)
                .map(|i| map.etas[i]);
            let consistent = match (root, grid_transition) {
                (Some(r), Some(t)) => (r - t).abs() <= step + 2.0 * DEFAULT_BISECTION_TOL,
                (None, None) => true,
                // A root on the grid edge may leave no interior transition.
                (Some(r), None) => (r - eta.min).abs() <= step || (r - eta.max).abs() <= step,
                (None, Some(_)) => false,
            };
            map.slice_checks.push(SliceCheck {
                g: gv,
                kind,
                root,
                grid_transition,
                consistent,
            });
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub eta: f64,
    pub g: f64,
    pub g_ab: f64,
    pub g_ba: f64,
}

/// Steerabilities of a noisy channel over an `(η, g)` grid, g slowest.
pub fn surface_3d(state: &TmssSpec, eta: &AxisRange, g: &AxisRange) -> Result<Vec<SurfaceRow>> {
    let spec = SweepSpec::new(
        Scenario::new(*state, ChannelSpec::Noisy { eta: 1.0, g: 0.0 }),
        SweepAxis::Eta,
        *eta,
    )
    .with_second(SweepAxis::Noise, *g);
    Ok(sweep_grid(&spec)?
        .into_iter()
        .map(|r| SurfaceRow {
            eta: r.first,
            g: r.second,
            g_ab: r.row.g_ab,
            g_ba: r.row.g_ba,
        })
        .collect())
}
