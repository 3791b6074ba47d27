//! Datasets behind the standard figures. Each figure yields one or more
//! named CSV files.

use eprsteer_core::sweep::{boundary_curve, SweepRow};
use eprsteer_core::table::{fmt_num, region_csv, surface_csv, SWEEP_HEADER};
use eprsteer_core::{
    find_crossover_impure, full_report, region_map_2d, surface_3d, sweep_1d, AxisRange,
    BoundaryKind, ChannelSpec, CorrelatedNoise, RegionMap, Scenario, SweepAxis, SweepSpec,
    TmssSpec,
};

use crate::config::{FigureName, RunConfig};
use crate::error::CliResult;

pub const FIG2_PURITIES: [f64; 5] = [1.0, 0.8, 0.6, 0.4, 0.2];
pub const FIG3_NOISE: f64 = 5.0;
pub const FIG3_ETA: f64 = 0.6;
pub const FIG3_T: f64 = 0.9;
pub const FIG3_MAX_NOISE: f64 = 20.0;
pub const FIG4_DELTAS: [f64; 2] = [0.0, 0.5];
pub const FIG5_MAX_NOISE: f64 = 5.0;
pub const FIG5_POINTS: usize = 201;
pub const BOUNDARY_HEADER: &str = "kind,eta,g";
const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    pub contents: String,
}

impl Dataset {
    fn new(name: impl Into<String>, contents: String) -> Self {
        Self {
            name: name.into(),
            contents,
        }
    }
}

/// Rows of several sweeps in one table, prefixed by a series label column.
fn series_csv(label: &str, axis: &str, series: &[(String, Vec<SweepRow>)]) -> String {
    let rest = SWEEP_HEADER.split_once(',').expect("axis column").1;
    let mut out = format!("{label},{axis},{rest}\n");
    for (name, rows) in series {
        for r in rows {
            let v = [
                r.axis, r.g_ab, r.g_ba, r.reid_ab, r.reid_ba, r.ppt, r.purity,
            ];
            out.push_str(name);
            out.push(',');
            out.push_str(&v.map(fmt_num).join(","));
            out.push('\n');
        }
    }
    out
}

fn unit_range() -> AxisRange {
    AxisRange::new(0.0, 1.0, 201).expect("valid range")
}

fn sweep(
    state: TmssSpec,
    channel: ChannelSpec,
    axis: SweepAxis,
    range: AxisRange,
) -> CliResult<Vec<SweepRow>> {
    Ok(sweep_1d(&SweepSpec::new(
        Scenario::new(state, channel),
        axis,
        range,
    ))?)
}

fn revival(eta: f64, g: f64) -> ChannelSpec {
    ChannelSpec::Revival {
        eta,
        g,
        t: FIG3_T,
        g_an: CorrelatedNoise::Matched,
    }
}

pub fn cmd_figure(name: FigureName, cfg: &RunConfig) -> CliResult<Vec<Dataset>> {
    let state = cfg.state.tmss()?;
    match name {
        FigureName::Fig2 => fig2(state),
        FigureName::Fig3 => fig3(state),
        FigureName::Fig4 => fig4(state),
        FigureName::Fig5 => fig5(state),
    }
}

/// Lossy transmission sweeps of states with the same squeezing and
/// decreasing purity.
fn fig2(state: TmssSpec) -> CliResult<Vec<Dataset>> {
    let mut series = Vec::new();
    for mu in FIG2_PURITIES {
        let s = TmssSpec::with_purity(state.r(), mu)?;
        series.push((
            fmt_num(mu),
            sweep(
                s,
                ChannelSpec::Lossy { eta: 1.0 },
                SweepAxis::Eta,
                unit_range(),
            )?,
        ));
    }
    Ok(vec![Dataset::new(
        "fig2_lossy.csv",
        series_csv("purity_in", "eta", &series),
    )])
}

/// Noisy channel against transmission and against noise, with the matched
/// revival and a pure-loss reference.
fn fig3(state: TmssSpec) -> CliResult<Vec<Dataset>> {
    let eta_axis = vec![
        (
            "noisy".to_string(),
            sweep(
                state,
                ChannelSpec::Noisy {
                    eta: 1.0,
                    g: FIG3_NOISE,
                },
                SweepAxis::Eta,
                unit_range(),
            )?,
        ),
        // Matching is undefined at η = 1, so the revival series stops one
        // grid step short.
        (
            "revival".to_string(),
            sweep(
                state,
                revival(1.0, FIG3_NOISE),
                SweepAxis::Eta,
                AxisRange::new(0.0, 0.995, 200)?,
            )?,
        ),
        (
            "lossy".to_string(),
            sweep(
                state,
                ChannelSpec::Lossy { eta: 1.0 },
                SweepAxis::Eta,
                unit_range(),
            )?,
        ),
    ];

    let g_range = AxisRange::new(0.0, FIG3_MAX_NOISE, 201)?;
    let lossy_point = full_report(&eprsteer_core::apply_lossy(&state.build(), FIG3_ETA)?)?;
    let lossy_rows = g_range
        .values()
        .into_iter()
        .map(|g| SweepRow {
            axis: g,
            g_ab: lossy_point.g_ab,
            g_ba: lossy_point.g_ba,
            reid_ab: lossy_point.reid_ab,
            reid_ba: lossy_point.reid_ba,
            ppt: lossy_point.ppt_value,
            purity: lossy_point.purity,
        })
        .collect();
    let g_axis = vec![
        (
            "noisy".to_string(),
            sweep(
                state,
                ChannelSpec::Noisy {
                    eta: FIG3_ETA,
                    g: 0.0,
                },
                SweepAxis::Noise,
                g_range,
            )?,
        ),
        (
            "revival".to_string(),
            sweep(state, revival(FIG3_ETA, 0.0), SweepAxis::Noise, g_range)?,
        ),
        ("lossy".to_string(), lossy_rows),
    ];
    Ok(vec![
        Dataset::new("fig3_eta.csv", series_csv("series", "eta", &eta_axis)),
        Dataset::new("fig3_noise.csv", series_csv("series", "g", &g_axis)),
    ])
}

/// Steerability surfaces over (η, g) for a pure and an impure state, plus
/// the noise level where the two directions cross.
fn fig4(state: TmssSpec) -> CliResult<Vec<Dataset>> {
    let eta = AxisRange::new(0.0, 1.0, 101)?;
    let g = AxisRange::new(0.0, 2.0, 81)?;
    let mut out = Vec::new();
    let mut crossover = String::from("delta,g_star\n");
    for delta in FIG4_DELTAS {
        let s = TmssSpec::new(state.r(), delta)?;
        out.push(Dataset::new(
            format!("fig4_surface_delta{}.csv", fmt_num(delta)),
            surface_csv(&surface_3d(&s, &eta, &g)?),
        ));
        let c = find_crossover_impure(s.r(), delta)?;
        crossover.push_str(&format!("{},{}\n", fmt_num(delta), fmt_num(c.noise)));
    }
    out.push(Dataset::new("fig4_crossover.csv", crossover));
    Ok(out)
}

pub fn fig5_map(state: &TmssSpec) -> CliResult<RegionMap> {
    Ok(region_map_2d(
        state,
        &AxisRange::new(0.0, 1.0, FIG5_POINTS)?,
        &AxisRange::new(0.0, FIG5_MAX_NOISE, FIG5_POINTS)?,
    )?)
}

/// Regime map over (η, g) with the three death curves and the crossover.
fn fig5(state: TmssSpec) -> CliResult<Vec<Dataset>> {
    let map = fig5_map(&state)?;
    let sc = Scenario::new(state, ChannelSpec::Noisy { eta: 1.0, g: 0.0 });
    let mut boundaries = format!("{BOUNDARY_HEADER}\n");
    for kind in [
        BoundaryKind::AtoBDeath,
        BoundaryKind::BtoADeath,
        BoundaryKind::EntanglementDeath,
    ] {
        let curve = boundary_curve(
            kind,
            &sc,
            SweepAxis::Eta,
            SweepAxis::Noise,
            &map.gs,
            (0.0, 1.0),
            BOUNDARY_TOL,
        )?;
        for p in &curve.points {
            boundaries.push_str(&format!(
                "{kind},{},{}\n",
                fmt_num(p.root),
                fmt_num(p.fixed)
            ));
        }
    }
    // At η = 1 both directions coincide for every g, so the crossover is not
    // isolated there.
    let etas: Vec<f64> = map.etas.iter().copied().filter(|&e| e < 1.0).collect();
    let crossover = boundary_curve(
        BoundaryKind::DirectionCrossover,
        &sc,
        SweepAxis::Noise,
        SweepAxis::Eta,
        &etas,
        (0.0, FIG5_MAX_NOISE),
        BOUNDARY_TOL,
    )?;
    for p in &crossover.points {
        boundaries.push_str(&format!(
            "{},{},{}\n",
            BoundaryKind::DirectionCrossover,
            fmt_num(p.fixed),
            fmt_num(p.root)
        ));
    }
    let checks =
        serde_json::to_string_pretty(&map.slice_checks).expect("plain data serialises") + "\n";
    Ok(vec![
        Dataset::new("fig5_regions.csv", region_csv(&map)),
        Dataset::new("fig5_boundaries.csv", boundaries),
        Dataset::new("fig5_slice_checks.json", checks),
    ])
}
