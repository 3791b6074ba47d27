//! Two-mode Gaussian covariance matrices.
//!
//! Quadratures are ordered `(x_A, p_A, x_B, p_B)` and normalised so that the
//! vacuum has unit variance. The matrix is partitioned as
//!
//! ```text
//!     | A   C |
//!     | C^T B |
//! ```
//!
//! with `A`, `B` the local 2x2 blocks of modes A and B and `C` their
//! correlations.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|σ_ij - σ_ji|`, relative to `max(1, |σ_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Slack allowed below the uncertainty bound `ν ≥ 1` for exact states.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Relaxed slack used for matrices estimated from finite samples.
pub const RECONSTRUCTION_TOL: f64 = 1e-3;

/// Quadrature labels in storage order.
pub const QUADRATURE_ORDER: [&str; 4] = ["xA", "pA", "xB", "pB"];

const X_IDX: [usize; 2] = [0, 2];
const P_IDX: [usize; 2] = [1, 3];

/// A 4x4 real symmetric quadrature covariance matrix in shot-noise units.
///
/// Construction only enforces symmetry and finiteness. Measured matrices may
/// sit slightly below the uncertainty bound, so physicality is a separate
/// check ([`check_physicality`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CovarianceJson", into = "CovarianceJson")]
pub struct TwoModeCovariance {
    m: Matrix4<f64>,
}

impl TwoModeCovariance {
    pub fn from_rows(rows: [[f64; 4]; 4]) -> Result<Self> {
        let m = Matrix4::from_fn(|i, j| rows[i][j]);
        Self::from_matrix(m)
    }

    pub fn from_matrix(m: Matrix4<f64>) -> Result<Self> {
        if let Some(v) = m.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidState(format!("non-finite entry {v}")));
        }
        for i in 0..4 {
            for j in (i + 1)..4 {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if (a - b).abs() > SYMMETRY_TOL * 1f64.max(a.abs()).max(b.abs()) {
                    return Err(Error::InvalidState(format!(
                        "matrix not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(Self { m })
    }

    /// Assembles `[[A, C], [C^T, B]]` from its blocks.
    pub fn from_blocks(a: Matrix2<f64>, b: Matrix2<f64>, c: Matrix2<f64>) -> Result<Self> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&b);
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&c);
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&c.transpose());
        Self::from_matrix(m)
    }

    /// Standard form `A = αI`, `B = βI`, `C = γZ`.
    pub fn standard_form(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        Self::from_blocks(
            Matrix2::identity() * alpha,
            Matrix2::identity() * beta,
            Matrix2::new(gamma, 0.0, 0.0, -gamma),
        )
    }

    pub fn identity() -> Self {
        Self {
            m: Matrix4::identity(),
        }
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn rows(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[(i, j)];
            }
        }
        out
    }

    pub fn block_a(&self) -> Matrix2<f64> {
        self.m.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn block_b(&self) -> Matrix2<f64> {
        self.m.fixed_view::<2, 2>(2, 2).into_owned()
    }

    pub fn block_c(&self) -> Matrix2<f64> {
        self.m.fixed_view::<2, 2>(0, 2).into_owned()
    }

    pub fn det_a(&self) -> f64 {
        det2(&self.block_a())
    }

    pub fn det_b(&self) -> f64 {
        det2(&self.block_b())
    }

    pub fn det_c(&self) -> f64 {
        det2(&self.block_c())
    }

    /// True when no entry couples an x quadrature to a p quadrature.
    pub fn is_xp_separable(&self) -> bool {
        X_IDX.iter().all(|&i| {
            P_IDX
                .iter()
                .all(|&j| self.m[(i, j)] == 0.0 && self.m[(j, i)] == 0.0)
        })
    }

    /// `det σ`. Uses the product of the x- and p-subspace 2x2 determinants when
    /// the matrix has no x-p cross terms, otherwise LU.
    pub fn determinant(&self) -> f64 {
        if self.is_xp_separable() {
            self.determinant_xp_blocks()
        } else {
            self.determinant_lu()
        }
    }

    pub(crate) fn determinant_xp_blocks(&self) -> f64 {
        let sub = |idx: [usize; 2]| {
            let [i, j] = idx;
            self.m[(i, i)] * self.m[(j, j)] - self.m[(i, j)] * self.m[(j, i)]
        };
        sub(X_IDX) * sub(P_IDX)
    }

    pub(crate) fn determinant_lu(&self) -> f64 {
        self.m.lu().determinant()
    }

    /// Seralian invariant `det A + det B + 2 det C`.
    pub fn seralian(&self) -> f64 {
        self.det_a() + self.det_b() + 2.0 * self.det_c()
    }

    /// Exchanges the roles of modes A and B.
    pub fn swap_modes(&self) -> Self {
        const PERM: [usize; 4] = [2, 3, 0, 1];
        Self {
            m: Matrix4::from_fn(|i, j| self.m[(PERM[i], PERM[j])]),
        }
    }

    /// Four whitespace-delimited lines, 17 significant digits per entry.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for i in 0..4 {
            let line: Vec<String> = (0..4).map(|j| format!("{:.16e}", self.m[(i, j)])).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|e| Error::Parse(format!("bad matrix entry {t:?}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        CovarianceJson {
            order: QUADRATURE_ORDER.iter().map(|s| s.to_string()).collect(),
            matrix: rows,
        }
        .try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("covariance serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl Default for TwoModeCovariance {
    fn default() -> Self {
        Self::identity()
    }
}

impl fmt::Display for TwoModeCovariance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for TwoModeCovariance {
    type Err = Error;

    /// Accepts either the JSON object form or the four-line text form.
    fn from_str(s: &str) -> Result<Self> {
        if s.trim_start().starts_with('{') {
            Self::from_json(s)
        } else {
            Self::from_text(s)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CovarianceJson {
    order: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

impl From<TwoModeCovariance> for CovarianceJson {
    fn from(c: TwoModeCovariance) -> Self {
        CovarianceJson {
            order: QUADRATURE_ORDER.iter().map(|s| s.to_string()).collect(),
            matrix: c.rows().iter().map(|r| r.to_vec()).collect(),
        }
    }
}

impl TryFrom<CovarianceJson> for TwoModeCovariance {
    type Error = Error;

    fn try_from(j: CovarianceJson) -> Result<Self> {
        if j.order != QUADRATURE_ORDER {
            return Err(Error::Parse(format!(
                "unsupported quadrature order {:?}, expected {:?}",
                j.order, QUADRATURE_ORDER
            )));
        }
        if j.matrix.len() != 4 || j.matrix.iter().any(|r| r.len() != 4) {
            return Err(Error::Parse("matrix must be 4x4".into()));
        }
        TwoModeCovariance::from_matrix(Matrix4::from_fn(|i, k| j.matrix[i][k]))
    }
}

fn det2(m: &Matrix2<f64>) -> f64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

/// Converts a squeezing magnitude in dB below shot noise to the squeezing
/// parameter `r`, so that `e^{-2r} = 10^{-dB/10}`.
pub fn db_to_r(squeezing_db: f64) -> Result<f64> {
    if !squeezing_db.is_finite() || squeezing_db < 0.0 {
        return Err(Error::Domain(format!(
            "squeezing must be a finite non-negative dB value, got {squeezing_db}"
        )));
    }
    Ok(squeezing_db * std::f64::consts::LN_10 / 20.0)
}

/// Two-mode squeezed state with squeezing parameter `r` and an uncorrelated
/// anti-squeezing excess `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TmssSpec {
    r: f64,
    delta: f64,
}

impl TmssSpec {
    pub fn new(r: f64, delta: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::Domain(format!(
                "squeezing parameter r must be >= 0, got {r}"
            )));
        }
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::Domain(format!(
                "excess delta must be >= 0, got {delta}"
            )));
        }
        Ok(Self { r, delta })
    }

    pub fn pure(r: f64) -> Result<Self> {
        Self::new(r, 0.0)
    }

    pub fn from_db(squeezing_db: f64, delta: f64) -> Result<Self> {
        Self::new(db_to_r(squeezing_db)?, delta)
    }

    /// Picks `delta` so that the state has purity `mu`.
    pub fn with_purity(r: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::Domain(format!(
                "purity must lie in (0, 1], got {mu}"
            )));
        }
        Self::new(r, (2.0 * r).exp() * (1.0 / mu - 1.0))
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Squeezed-quadrature variance `e^{-2r}`.
    pub fn v_s(&self) -> f64 {
        (-2.0 * self.r).exp()
    }

    /// Anti-squeezed variance `e^{2r} + δ`.
    pub fn v_as(&self) -> f64 {
        (2.0 * self.r).exp() + self.delta
    }

    pub fn alpha(&self) -> f64 {
        0.5 * (self.v_s() + self.v_as())
    }

    pub fn gamma(&self) -> f64 {
        0.5 * (self.v_s() - self.v_as())
    }

    pub fn build(&self) -> TwoModeCovariance {
        build_tmss(self)
    }
}

pub fn build_tmss(spec: &TmssSpec) -> TwoModeCovariance {
    let (a, g) = (spec.alpha(), spec.gamma());
    TwoModeCovariance::standard_form(a, a, g).expect("TMSS matrix is symmetric and finite")
}

/// Symplectic eigenvalues `(ν₋, ν₊)`, ascending.
pub fn symplectic_eigenvalues(sigma: &TwoModeCovariance) -> Result<(f64, f64)> {
    let min_eig = min_eigenvalue(sigma);
    if min_eig.is_nan() || min_eig <= 0.0 {
        return Err(Error::InvalidState(format!(
            "covariance matrix not positive definite (min eigenvalue {min_eig})"
        )));
    }
    let det = sigma.determinant();
    let (lo, hi) = two_mode_invariant_roots(sigma.seralian(), det)?;
    Ok((lo.sqrt(), hi.sqrt()))
}

/// Roots `(λ₋, λ₊)` of `λ² - s λ + det` for a two-mode invariant `s`.
/// The radicand is clamped to zero when it is negative by less than
/// `PHYSICALITY_TOL` relative to `s²`.
pub(crate) fn two_mode_invariant_roots(s: f64, det: f64) -> Result<(f64, f64)> {
    let mut disc = s * s - 4.0 * det;
    if disc < 0.0 {
        if disc >= -PHYSICALITY_TOL * s * s.max(1.0) {
            disc = 0.0;
        } else {
            return Err(Error::InvalidState(format!(
                "negative discriminant {disc} (invariant {s}, det {det})"
            )));
        }
    }
    let hi = 0.5 * (s + disc.sqrt());
    if hi.is_nan() || hi <= 0.0 {
        return Err(Error::InvalidState(format!(
            "non-positive invariant {s} with det {det}"
        )));
    }
    Ok((det / hi, hi))
}

fn min_eigenvalue(sigma: &TwoModeCovariance) -> f64 {
    sigma.matrix().symmetric_eigenvalues().min()
}

/// Purity `1/√det σ`. Errors when `det σ` falls below the vacuum bound.
pub fn purity(sigma: &TwoModeCovariance) -> Result<f64> {
    let det = sigma.determinant();
    if det < 1.0 - PHYSICALITY_TOL {
        return Err(Error::InvalidState(format!(
            "det σ = {det} < 1 violates the uncertainty principle"
        )));
    }
    Ok(1.0 / det.sqrt())
}

/// Closed-form purity of a TMSS: `e^{2r} / (e^{2r} + δ)`.
pub fn purity_from_delta(r: f64, delta: f64) -> f64 {
    let e = (2.0 * r).exp();
    e / (e + delta)
}

/// Outcome of [`check_physicality`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Physicality {
    pub physical: bool,
    pub positive_definite: bool,
    pub min_eigenvalue: f64,
    /// Smallest symplectic eigenvalue, when defined.
    pub min_symplectic: Option<f64>,
    pub tolerance: f64,
}

impl Physicality {
    pub fn diagnostic(&self) -> Option<String> {
        if self.physical {
            return None;
        }
        Some(match self.min_symplectic {
            _ if !self.positive_definite => format!(
                "not positive definite: eigenvalue {:.6e}",
                self.min_eigenvalue
            ),
            Some(nu) => format!(
                "symplectic eigenvalue {nu:.9} below 1 - {:e}",
                self.tolerance
            ),
            None => "symplectic spectrum undefined".to_string(),
        })
    }
}

pub fn check_physicality(sigma: &TwoModeCovariance) -> Physicality {
    check_physicality_with(sigma, PHYSICALITY_TOL)
}

/// Physicality with an explicit slack below `ν = 1`.
pub fn check_physicality_with(sigma: &TwoModeCovariance, tol: f64) -> Physicality {
    let min_eig = min_eigenvalue(sigma);
    let positive_definite = min_eig > 0.0;
    let min_symplectic = symplectic_eigenvalues(sigma).ok().map(|(lo, _)| lo);
    let physical = positive_definite && min_symplectic.is_some_and(|nu| nu >= 1.0 - tol);
    Physicality {
        physical,
        positive_definite,
        min_eigenvalue: min_eig,
        min_symplectic,
        tolerance: tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eq6() -> TwoModeCovariance {
        TwoModeCovariance::from_rows([
            [1.26, 0.0, -0.79, 0.0],
            [0.0, 1.28, 0.0, 0.80],
            [-0.79, 0.0, 1.32, 0.0],
            [0.0, 0.80, 0.0, 1.28],
        ])
        .unwrap()
    }

    #[test]
    fn db_conversion() {
        assert_eq!(db_to_r(0.0).unwrap(), 0.0);
        let r = db_to_r(3.0).unwrap();
        assert_relative_eq!(r, 0.345_387_763_949_106_9, epsilon = 1e-15);
        assert_relative_eq!((-2.0 * r).exp(), 0.501_187_233_627_272_2, epsilon = 1e-15);
        assert_relative_eq!((-2.0 * db_to_r(10.0).unwrap()).exp(), 0.1, epsilon = 1e-15);
        assert!(matches!(db_to_r(-1.0), Err(Error::Domain(_))));
        assert!(db_to_r(f64::NAN).is_err());
    }

    #[test]
    fn vacuum_tmss_is_identity() {
        let s = TmssSpec::new(0.0, 0.0).unwrap().build();
        assert_eq!(s, TwoModeCovariance::identity());
    }

    #[test]
    fn three_db_tmss_entries() {
        let spec = TmssSpec::from_db(3.0, 0.0).unwrap();
        let s = spec.build();
        assert_relative_eq!(s.get(0, 0), 1.248_224_774_298_076, epsilon = 1e-12);
        assert_relative_eq!(s.get(2, 2), 1.248_224_774_298_076, epsilon = 1e-12);
        assert_relative_eq!(s.get(0, 2), -0.747_037_540_670_804, epsilon = 1e-12);
        assert_relative_eq!(s.get(1, 3), 0.747_037_540_670_804, epsilon = 1e-12);
        assert_relative_eq!(s.determinant(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn impure_tmss_purity() {
        let r = db_to_r(3.0).unwrap();
        let s = TmssSpec::new(r, 0.5).unwrap().build();
        assert!((purity(&s).unwrap() - 0.8).abs() < 5e-3);
        let s = TmssSpec::new(r, 1.33).unwrap().build();
        assert!((purity(&s).unwrap() - 0.6).abs() < 5e-3);
    }

    #[test]
    fn with_purity_inverts_closed_form() {
        let spec = TmssSpec::with_purity(0.7, 0.35).unwrap();
        assert_relative_eq!(
            purity_from_delta(spec.r(), spec.delta()),
            0.35,
            epsilon = 1e-12
        );
        assert!(TmssSpec::with_purity(0.7, 0.0).is_err());
        assert!(TmssSpec::with_purity(0.7, 1.2).is_err());
    }

    #[test]
    fn tmss_spec_validation() {
        assert!(TmssSpec::new(-0.1, 0.0).is_err());
        assert!(TmssSpec::new(0.1, -0.5).is_err());
    }

    #[test]
    fn symplectic_spectrum_examples() {
        let (a, b) = symplectic_eigenvalues(&TwoModeCovariance::identity()).unwrap();
        assert_relative_eq!(a, 1.0, epsilon = 1e-12);
        assert_relative_eq!(b, 1.0, epsilon = 1e-12);

        let pure = TmssSpec::from_db(3.0, 0.0).unwrap().build();
        let (a, b) = symplectic_eigenvalues(&pure).unwrap();
        assert_relative_eq!(a * b, 1.0, epsilon = 1e-9);
        assert_relative_eq!(a, 1.0, epsilon = 1e-6);

        let (a, b) = symplectic_eigenvalues(&eq6()).unwrap();
        assert_relative_eq!(a * b, 1.037_437_44f64.sqrt(), epsilon = 1e-9);
        assert!(a < 1.0, "the measured matrix sits slightly below the bound");
    }

    #[test]
    fn symplectic_rejects_indefinite() {
        let m = TwoModeCovariance::from_rows([
            [1.0, 0.0, 2.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [2.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!(matches!(
            symplectic_eigenvalues(&m),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn purity_examples() {
        assert_relative_eq!(purity(&TwoModeCovariance::identity()).unwrap(), 1.0);
        assert_relative_eq!(
            purity(&eq6()).unwrap(),
            0.981_790_988_200_716,
            epsilon = 1e-9
        );
        let squeezed_both = TwoModeCovariance::standard_form(0.5, 1.0, 0.0).unwrap();
        assert!(matches!(
            purity(&squeezed_both),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn purity_from_delta_ladder() {
        let r = db_to_r(3.0).unwrap();
        assert_eq!(purity_from_delta(r, 0.0), 1.0);
        assert!((purity_from_delta(r, 0.5) - 0.800).abs() < 5e-3);
        assert!((purity_from_delta(r, 7.97) - 0.200).abs() < 5e-3);
    }

    #[test]
    fn physicality_examples() {
        assert!(check_physicality(&TwoModeCovariance::identity()).physical);
        let bad = TwoModeCovariance::from_rows([
            [0.5, 0.0, 0.0, 0.0],
            [0.0, 0.5, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        let p = check_physicality(&bad);
        assert!(!p.physical);
        assert!(p.positive_definite);
        assert_relative_eq!(p.min_symplectic.unwrap(), 0.5, epsilon = 1e-12);
        assert!(p.diagnostic().unwrap().contains("0.5"));

        let indefinite = TwoModeCovariance::standard_form(1.0, 1.0, 3.0).unwrap();
        let p = check_physicality(&indefinite);
        assert!(!p.positive_definite && !p.physical);
        assert!(p.diagnostic().unwrap().contains("positive definite"));

        assert!(!check_physicality(&eq6()).physical);
        assert!(!check_physicality_with(&eq6(), RECONSTRUCTION_TOL).physical);
        assert!(check_physicality_with(&eq6(), 1e-2).physical);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let mut rows = [[0.0; 4]; 4];
        for (i, r) in rows.iter_mut().enumerate() {
            r[i] = 1.0;
        }
        rows[0][2] = 0.1;
        assert!(matches!(
            TwoModeCovariance::from_rows(rows),
            Err(Error::InvalidState(_))
        ));
        rows[2][0] = 0.1;
        assert!(TwoModeCovariance::from_rows(rows).is_ok());
    }

    #[test]
    fn block_accessors() {
        let m = eq6();
        assert_relative_eq!(m.det_a(), 1.6128, epsilon = 1e-12);
        assert_relative_eq!(m.det_b(), 1.6896, epsilon = 1e-12);
        assert_relative_eq!(m.det_c(), -0.632, epsilon = 1e-12);
        assert_eq!(m.swap_modes().block_a(), m.block_b());
        assert_eq!(m.swap_modes().swap_modes(), m);
    }

    #[test]
    fn determinant_paths_agree() {
        let m = eq6();
        assert!(m.is_xp_separable());
        assert!((m.determinant_xp_blocks() - m.determinant_lu()).abs() < 1e-12);
        let spec = TmssSpec::new(0.9, 2.1).unwrap().build();
        assert!((spec.determinant_xp_blocks() - spec.determinant_lu()).abs() < 1e-12);
    }

    #[test]
    fn json_and_text_forms() {
        let m = eq6();
        let json = m.to_json();
        assert!(json.contains("\"order\""));
        assert_eq!(TwoModeCovariance::from_json(&json).unwrap(), m);
        assert_eq!(TwoModeCovariance::from_text(&m.to_text()).unwrap(), m);
        assert_eq!(json.parse::<TwoModeCovariance>().unwrap(), m);

        let wrong_order =
            r#"{"order":["xA","xB","pA","pB"],"matrix":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}"#;
        assert!(matches!(
            TwoModeCovariance::from_json(wrong_order),
            Err(Error::Parse(_))
        ));
        assert!(TwoModeCovariance::from_text("1 0 0\n0 1 0\n0 0 1\n").is_err());
    }
}
