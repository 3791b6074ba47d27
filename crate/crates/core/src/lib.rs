//! Two-mode squeezed Gaussian states in lossy, noisy and correlated-noise
//! channels.
//!
//! States are 4x4 quadrature covariance matrices in shot-noise units
//! ([`TwoModeCovariance`]). The crate provides:
//!
//! - [`covariance`]: construction of squeezed states, symplectic spectrum,
//!   purity and physicality checks, JSON and text forms.
//! - [`metrics`]: Gaussian steerability in both directions, Reid
//!   conditional-variance products, the PPT value and regime classification.
//! - [`channels`]: loss, excess noise and noise cancellation with a
//!   correlated ancilla, all acting on mode B.
//! - [`homodyne`]: seeded synthetic homodyne samples, six-variance
//!   reconstruction and repeated-trial statistics.
//! - [`sweep`]: 1D/2D parameter sweeps, bisection of regime boundaries,
//!   region maps and steering surfaces.
//! - [`table`]: CSV output for sweeps, maps and surfaces.
//!
//! ```
//! use eprsteer_core::{apply_channel, full_report, ChannelSpec, Classification, TmssSpec};
//!
//! let state = TmssSpec::from_db(3.0, 0.0).unwrap().build();
//! let out = apply_channel(&state, &ChannelSpec::Lossy { eta: 0.3 }).unwrap();
//! let report = full_report(&out).unwrap();
//! assert_eq!(report.regime, Classification::OneWayAtoB);
//! ```

pub mod channels;
pub mod covariance;
pub mod error;
pub mod homodyne;
pub mod metrics;
pub mod sweep;
pub mod table;

pub use channels::{
    apply_channel, apply_channel_to_a, apply_lossy, apply_noisy, apply_revival,
    matched_correlated_noise, revival_ratio, ChannelSpec, CorrelatedNoise,
};
pub use covariance::{
    build_tmss, check_physicality, db_to_r, purity, purity_from_delta, symplectic_eigenvalues,
    Physicality, TmssSpec, TwoModeCovariance,
};
pub use error::{Error, Result};
pub use homodyne::{
    measure_variances, phase_jitter, reconstruct_covariance, reconstruct_trials,
    repeated_reconstruction, sample_state, MeasurementSet, Observable, QuadratureSamples,
    ReconstructionPlan, ReconstructionResult,
};
pub use metrics::{
    classify, full_report, ppt_value, reid_product, steering, steering_ab, steering_ba,
    Classification, Direction, SteeringReport,
};
pub use sweep::{
    boundary_curve, find_boundary, find_crossover_impure, region_map_2d, surface_3d, sweep_1d,
    AxisRange, BoundaryCurve, BoundaryKind, RegionMap, Scenario, SweepAxis, SweepSpec,
};
