use serde::Serialize;

use eprsteer_core::homodyne::ReconstructionPlan;
use eprsteer_core::sweep::{sweep_grid, GridRow, SweepRow};
use eprsteer_core::table::{fmt_num, sweep_csv};
use eprsteer_core::{
    apply_channel, full_report, matched_correlated_noise, reconstruct_trials, ChannelSpec,
    CorrelatedNoise, ReconstructionResult, Scenario, SteeringReport, SweepAxis, SweepSpec,
};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult};

/// Report header for `--format csv`.
pub const REPORT_HEADER: &str = "g_ab,g_ba,reid_ab,reid_ba,ppt,purity,regime";

pub fn report_csv(r: &SteeringReport) -> String {
    format!(
        "{REPORT_HEADER}\n{},{},{},{},{},{},{}\n",
        fmt_num(r.g_ab),
        fmt_num(r.g_ba),
        fmt_num(r.reid_ab),
        fmt_num(r.reid_ba),
        fmt_num(r.ppt_value),
        fmt_num(r.purity),
        r.regime
    )
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serialises");
    s.push('\n');
    s
}

/// Report for the configured state after the configured channel (if any).
pub fn cmd_report(cfg: &RunConfig) -> CliResult<SteeringReport> {
    let mut sigma = cfg.state.covariance();
    if let Some(ch) = &cfg.channel {
        sigma = apply_channel(&sigma, ch)?;
    }
    Ok(full_report(&sigma)?)
}

pub fn render_report(r: &SteeringReport, format: Format) -> String {
    match format {
        Format::Json => to_json(r),
        Format::Csv => report_csv(r),
    }
}

/// Output of `simulate`: the analytic report next to the reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simulation {
    pub channel: Option<ChannelSpec>,
    pub analytic: SteeringReport,
    pub reconstruction: ReconstructionResult,
}

pub fn cmd_simulate(cfg: &RunConfig) -> CliResult<Simulation> {
    let mut sigma = cfg.state.covariance();
    if let Some(ch) = &cfg.channel {
        sigma = apply_channel(&sigma, ch)?;
    }
    let plan =
        ReconstructionPlan::new(cfg.samples, cfg.trials, cfg.seed).with_phase_jitter(cfg.theta_deg);
    let reconstruction = reconstruct_trials(&sigma, &plan)?;
    for w in &reconstruction.warnings {
        log::warn!("{w}");
    }
    Ok(Simulation {
        channel: cfg.channel,
        analytic: full_report(&sigma)?,
        reconstruction,
    })
}

pub fn render_simulation(sim: &Simulation, format: Format) -> CliResult<String> {
    match format {
        Format::Json => Ok(to_json(sim)),
        Format::Csv => Err(CliError::usage("simulate writes JSON only")),
    }
}

/// Reports before and after noise cancellation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Revival {
    pub channel: ChannelSpec,
    /// Correlated ancilla noise actually applied.
    pub g_an: f64,
    pub before: SteeringReport,
    pub after: SteeringReport,
    pub revived_ab: bool,
    pub revived_ba: bool,
    /// A direction that was dead before is steerable after.
    pub success: bool,
}

pub fn cmd_revive(cfg: &RunConfig) -> CliResult<Revival> {
    let channel = cfg
        .channel
        .ok_or_else(|| CliError::usage("revive needs --channel revival:eta=..,g=..,T=..,gan=.."))?;
    let ChannelSpec::Revival { eta, g, t, g_an } = channel else {
        return Err(CliError::usage(format!(
            "revive needs a revival channel, got '{channel}'"
        )));
    };
    let g_an = match g_an {
        CorrelatedNoise::Matched => matched_correlated_noise(eta, g, t)?,
        CorrelatedNoise::Fixed(v) => v,
    };
    let sigma = cfg.state.covariance();
    let before = full_report(&apply_channel(&sigma, &ChannelSpec::Noisy { eta, g })?)?;
    let after = full_report(&apply_channel(&sigma, &channel)?)?;
    let revived_ab = before.g_ab == 0.0 && after.g_ab > 0.0;
    let revived_ba = before.g_ba == 0.0 && after.g_ba > 0.0;
    Ok(Revival {
        channel,
        g_an,
        before,
        after,
        revived_ab,
        revived_ba,
        success: revived_ab || revived_ba,
    })
}

pub fn render_revival(r: &Revival, format: Format) -> String {
    match format {
        Format::Json => to_json(r),
        Format::Csv => {
            let mut out = format!("stage,{REPORT_HEADER}\n");
            for (stage, rep) in [("before", &r.before), ("after", &r.after)] {
                let body = report_csv(rep);
                let row = body.lines().nth(1).expect("report row");
                out.push_str(&format!("{stage},{row}\n"));
            }
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SweepOutput {
    Line(Vec<SweepRow>),
    Grid(Vec<GridRow>),
}

pub fn axis_name(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::Eta => "eta",
        SweepAxis::Noise => "g",
        SweepAxis::Purity => "purity_in",
    }
}

/// 1D sweep, or a grid when `--grid` is present. The channel defaults to
/// pure loss.
pub fn cmd_sweep(cfg: &RunConfig) -> CliResult<SweepOutput> {
    let sweep = cfg
        .sweep
        .ok_or_else(|| CliError::usage("sweep needs --sweep axis:min:max[:points]"))?;
    let scenario = Scenario::new(
        cfg.state.tmss()?,
        cfg.channel.unwrap_or(ChannelSpec::Lossy { eta: 1.0 }),
    );
    let mut spec = SweepSpec::new(scenario, sweep.axis, sweep.range);
    match cfg.grid {
        None => Ok(SweepOutput::Line(eprsteer_core::sweep_1d(&spec)?)),
        Some(grid) => {
            if grid.axis == sweep.axis {
                return Err(CliError::usage("grid axis must differ from the sweep axis"));
            }
            spec = spec.with_second(grid.axis, grid.range);
            Ok(SweepOutput::Grid(sweep_grid(&spec)?))
        }
    }
}

pub fn render_sweep(cfg: &RunConfig, out: &SweepOutput, format: Format) -> String {
    match (format, out) {
        (Format::Json, o) => to_json(o),
        (Format::Csv, SweepOutput::Line(rows)) => sweep_csv(rows),
        (Format::Csv, SweepOutput::Grid(rows)) => {
            let first = cfg.sweep.map_or("first", |s| axis_name(s.axis));
            let second = cfg.grid.map_or("second", |s| axis_name(s.axis));
            let mut s = format!("{first},{second},g_ab,g_ba,reid_ab,reid_ba,ppt,purity\n");
            for r in rows {
                let v = [
                    r.first,
                    r.second,
                    r.row.g_ab,
                    r.row.g_ba,
                    r.row.reid_ab,
                    r.row.reid_ba,
                    r.row.ppt,
                    r.row.purity,
                ];
                s.push_str(&v.map(fmt_num).join(","));
                s.push('\n');
            }
            s
        }
    }
}
