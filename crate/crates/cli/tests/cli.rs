use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use eprsteer_cli::config::parse_config_file;
use eprsteer_cli::{
    cmd_figure, cmd_report, cmd_revive, cmd_simulate, cmd_sweep, CommonArgs, FigureName, Format,
    RunConfig, StateSource, SweepOutput,
};
use eprsteer_core::{Classification, TmssSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eprsteer"))
}

fn resolve(args: CommonArgs) -> RunConfig {
    RunConfig::layer(&args, &BTreeMap::new()).unwrap()
}

fn with_channel(ch: &str) -> RunConfig {
    resolve(CommonArgs {
        channel: Some(ch.into()),
        ..Default::default()
    })
}

/// ln cosh 2r at 3 dB: det A = cosh² 2r and det σ = 1 for the pure state.
fn pure_3db_steering() -> f64 {
    (2.0 * 3.0 * 10f64.ln() / 20.0).cosh().ln()
}

const MEASURED_JSON: &str = r#"{"order":["xA","pA","xB","pB"],"matrix":[
  [1.26, 0.0, -0.79, 0.0], [0.0, 1.28, 0.0, 0.80],
  [-0.79, 0.0, 1.32, 0.0], [0.0, 0.80, 0.0, 1.28]]}"#;

#[test]
fn report_pure_state_without_loss() {
    let r = cmd_report(&with_channel("lossy:eta=1")).unwrap();
    assert!((r.g_ab - pure_3db_steering()).abs() < 1e-12);
    assert_eq!(r.g_ab, r.g_ba);
    assert_eq!(r.regime, Classification::TwoWay);
}

#[test]
fn report_from_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    std::fs::write(&path, MEASURED_JSON).unwrap();
    let cfg = resolve(CommonArgs {
        matrix: Some(path),
        ..Default::default()
    });
    let r = cmd_report(&cfg).unwrap();
    let want = 0.5 * (1.6128f64 / 1.03743744).ln();
    assert!((r.g_ab - want).abs() < 1e-12);
    assert_eq!(r.regime, Classification::TwoWay);
}

#[test]
fn report_deep_in_noisy_channel_is_not_two_way() {
    let r = cmd_report(&with_channel("noisy:eta=0.5,g=5")).unwrap();
    assert_ne!(r.regime, Classification::TwoWay);
    assert!(!r.regime.is_steerable());
}

fn csv_rows(text: &str, series: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .filter_map(|l| l.strip_prefix(series).and_then(|r| r.strip_prefix(',')))
        .map(|r| r.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn find<'a>(sets: &'a [eprsteer_cli::Dataset], name: &str) -> &'a str {
    &sets
        .iter()
        .find(|d| d.name == name)
        .unwrap_or_else(|| panic!("{name} missing"))
        .contents
}

#[test]
fn fig2_critical_point_in_pure_series() {
    let sets = cmd_figure(FigureName::Fig2, &RunConfig::default()).unwrap();
    let text = find(&sets, "fig2_lossy.csv");
    assert!(text.starts_with("purity_in,eta,g_ab,g_ba,reid_ab,reid_ba,ppt,purity\n"));
    let pure = csv_rows(text, "1");
    let half = pure.iter().find(|r| r[0] == 0.5).unwrap();
    assert!(half[2].abs() < 1e-9, "g_ba = {}", half[2]);
    for mu in ["0.8", "0.6", "0.4", "0.2"] {
        assert_eq!(csv_rows(text, mu).len(), 201);
    }
}

#[test]
fn fig3_revival_overlay_matches_reduced_loss() {
    let sets = cmd_figure(FigureName::Fig3, &RunConfig::default()).unwrap();
    let eta = find(&sets, "fig3_eta.csv");
    let revived = csv_rows(eta, "revival");
    let lossy = csv_rows(eta, "lossy");
    let at = |rows: &[Vec<f64>], x: f64| {
        rows.iter()
            .find(|r| (r[0] - x).abs() < 1e-12)
            .unwrap()
            .clone()
    };
    let (a, b) = (at(&revived, 0.6), at(&lossy, 0.54));
    for k in 1..a.len() {
        assert!(
            (a[k] - b[k]).abs() <= 1e-11 * b[k].abs().max(1.0),
            "column {k}: {} vs {}",
            a[k],
            b[k]
        );
    }
    let noise = find(&sets, "fig3_noise.csv");
    let rev = csv_rows(noise, "revival");
    assert_eq!(rev.len(), 201);
    assert_eq!(rev.last().unwrap()[0], 20.0);
    assert!(
        rev.iter().all(|r| (r[1] - rev[0][1]).abs() < 1e-11),
        "revived steering depends on g"
    );
    assert!(csv_rows(noise, "noisy").last().unwrap()[1] == 0.0);
}

#[test]
fn fig4_surfaces_and_crossover_rows() {
    let sets = cmd_figure(FigureName::Fig4, &RunConfig::default()).unwrap();
    assert_eq!(
        find(&sets, "fig4_surface_delta0.csv").lines().count(),
        1 + 101 * 81
    );
    assert_eq!(
        find(&sets, "fig4_surface_delta0.5.csv").lines().count(),
        1 + 101 * 81
    );
    let cross = find(&sets, "fig4_crossover.csv");
    let rows: Vec<Vec<f64>> = cross
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!((rows[0][1] - 0.248224774298).abs() < 1e-11);
    assert!((rows[1][1] - 0.498224774298).abs() < 1e-11);
}

#[test]
fn fig5_boundaries_file() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["figure", "fig5", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(dir.path().join("fig5_boundaries.csv")).unwrap();
    assert!(text.starts_with("kind,eta,g\n"));
    let crossover: Vec<f64> = text
        .lines()
        .filter_map(|l| l.strip_prefix("direction-crossover,"))
        .map(|r| r.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(crossover.len() > 100);
    assert!(crossover.iter().all(|g| (g - 0.24823).abs() < 1e-5));
    for kind in ["atob-death", "btoa-death", "entanglement-death"] {
        assert!(text.lines().any(|l| l.starts_with(kind)), "{kind}");
    }
    let regions = std::fs::read_to_string(dir.path().join("fig5_regions.csv")).unwrap();
    assert_eq!(regions.lines().count(), 1 + 201 * 201);
}

fn simulate_cfg(channel: &str) -> RunConfig {
    RunConfig {
        channel: Some(channel.parse().unwrap()),
        samples: 100_000,
        trials: 3,
        seed: 11,
        ..RunConfig::default()
    }
}

#[test]
fn simulate_recovers_analytic_steering() {
    let sim = cmd_simulate(&simulate_cfg("lossy:eta=0.8")).unwrap();
    let (m, s) = (
        &sim.reconstruction.mean_report,
        &sim.reconstruction.std_report,
    );
    assert!((m.g_ab - sim.analytic.g_ab).abs() <= 3.0 * s.g_ab);
    assert_eq!(sim.reconstruction.seeds, vec![11, 12, 13]);
}

#[test]
fn simulate_phase_jitter_lowers_steering() {
    let clean = cmd_simulate(&simulate_cfg("lossy:eta=0.8")).unwrap();
    let jittered = cmd_simulate(&RunConfig {
        theta_deg: 1.5,
        ..simulate_cfg("lossy:eta=0.8")
    })
    .unwrap();
    assert!(jittered.reconstruction.mean_report.g_ab < clean.reconstruction.mean_report.g_ab);
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> Vec<u8> {
    let path = dir.join(name);
    let status = bin().args(args).arg("--out").arg(&path).status().unwrap();
    assert!(status.success(), "{args:?}");
    std::fs::read(path).unwrap()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--channel",
        "noisy:eta=0.97,g=5",
        "--samples",
        "20000",
        "--seed",
        "5",
    ];
    assert_eq!(
        run_to(dir.path(), "a.json", &args),
        run_to(dir.path(), "b.json", &args)
    );
    let sweep = [
        "sweep",
        "--sweep",
        "eta:0:1:51",
        "--grid",
        "g:0:2:11",
        "--format",
        "csv",
    ];
    assert_eq!(
        run_to(dir.path(), "a.csv", &sweep),
        run_to(dir.path(), "b.csv", &sweep)
    );
}

#[test]
fn revive_dead_channel() {
    let r = cmd_revive(&with_channel("revival:eta=0.6,g=5,T=0.9,gan=auto")).unwrap();
    assert!(!r.before.regime.is_steerable());
    assert_eq!(r.after.regime, Classification::TwoWay);
    assert!(r.success && r.revived_ab && r.revived_ba);
    let lossy = cmd_report(&with_channel("lossy:eta=0.54")).unwrap();
    assert!((r.after.g_ab - lossy.g_ab).abs() < 1e-12);
    assert!((r.after.g_ba - lossy.g_ba).abs() < 1e-12);
    assert!((r.g_an - 5.0 * 0.4 * 0.9 / 0.1).abs() < 1e-12);
}

#[test]
fn revive_is_independent_of_noise_level() {
    let a = cmd_revive(&with_channel("revival:eta=0.6,g=5,T=0.9,gan=auto")).unwrap();
    let b = cmd_revive(&with_channel("revival:eta=0.6,g=20,T=0.9,gan=auto")).unwrap();
    for (x, y) in [
        (a.after.g_ab, b.after.g_ab),
        (a.after.g_ba, b.after.g_ba),
        (a.after.ppt_value, b.after.ppt_value),
    ] {
        assert!((x - y).abs() < 1e-12);
    }
    assert_eq!(a.after.regime, b.after.regime);
}

#[test]
fn revive_without_ancilla_changes_nothing() {
    let r = cmd_revive(&with_channel("revival:eta=0.6,g=5,T=1,gan=0")).unwrap();
    assert!((r.after.g_ab - r.before.g_ab).abs() < 1e-12);
    assert!((r.after.ppt_value - r.before.ppt_value).abs() < 1e-12);
    assert!(!r.success);
}

#[test]
fn sweep_command_line_and_grid() {
    let cfg = resolve(CommonArgs {
        sweep: Some("eta:0:1:11".into()),
        channel: Some("noisy:eta=1,g=5".into()),
        ..Default::default()
    });
    let SweepOutput::Line(rows) = cmd_sweep(&cfg).unwrap() else {
        panic!("expected a line sweep")
    };
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[10].axis, 1.0);

    let grid = RunConfig {
        grid: Some("g:0:1:3".parse().unwrap()),
        ..cfg
    };
    let SweepOutput::Grid(cells) = cmd_sweep(&grid).unwrap() else {
        panic!("expected a grid")
    };
    assert_eq!(cells.len(), 33);
}

#[test]
fn config_file_and_precedence() {
    let file = parse_config_file(
        "# sample\nstate-db = 6\nchannel = lossy:eta=0.3\nseed=42\nformat = csv\ntheta_deg = 0.5\n",
    )
    .unwrap();
    let from_file = RunConfig::layer(&CommonArgs::default(), &file).unwrap();
    assert_eq!(
        from_file.state,
        StateSource::Tmss(TmssSpec::from_db(6.0, 0.0).unwrap())
    );
    assert_eq!(from_file.seed, 42);
    assert_eq!(from_file.format, Format::Csv);
    assert_eq!(from_file.theta_deg, 0.5);

    let args = CommonArgs {
        state_r: Some(0.2),
        seed: Some(1),
        format: Some(Format::Json),
        ..Default::default()
    };
    let layered = RunConfig::layer(&args, &file).unwrap();
    assert_eq!(
        layered.state,
        StateSource::Tmss(TmssSpec::pure(0.2).unwrap())
    );
    assert_eq!(layered.seed, 1);
    assert_eq!(layered.format, Format::Json);
    assert_eq!(layered.channel, Some("lossy:eta=0.3".parse().unwrap()));
    assert_eq!(layered.trials, 3);
    assert_eq!(layered.samples, 100_000);

    assert!(parse_config_file("bogus = 1").is_err());
    assert!(parse_config_file("seed").is_err());
}

#[test]
fn purity_flag_solves_for_excess_noise() {
    let cfg = resolve(CommonArgs {
        purity: Some(0.4),
        ..Default::default()
    });
    let r = cmd_report(&cfg).unwrap();
    assert!((r.purity - 0.4).abs() < 1e-12);
}

fn exit_code(args: &[&str]) -> i32 {
    bin().args(args).output().unwrap().status.code().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(exit_code(&["report"]), 0);
    assert_eq!(exit_code(&["figure", "fig7"]), 2);
    assert_eq!(
        exit_code(&["report", "--state-db", "3", "--state-r", "1"]),
        2
    );
    assert_eq!(exit_code(&["sweep"]), 2);
    assert_eq!(exit_code(&["revive", "--channel", "lossy:eta=0.5"]), 2);
    assert_eq!(exit_code(&["report", "--state-db", "-1"]), 3);
    assert_eq!(exit_code(&["report", "--channel", "lossy:eta=1.5"]), 3);
    assert_eq!(
        exit_code(&["revive", "--channel", "revival:eta=0.5,g=2,T=1,gan=auto"]),
        3
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 -1\n").unwrap();
    assert_eq!(exit_code(&["report", "--matrix", bad.to_str().unwrap()]), 4);
    assert_eq!(exit_code(&["report", "--matrix", "/nonexistent/m.json"]), 3);
}

#[test]
fn report_csv_on_stdout() {
    let out = bin()
        .args(["report", "--format", "csv", "--channel", "lossy:eta=0.3"])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("g_ab,g_ba,reid_ab,reid_ba,ppt,purity,regime")
    );
    assert!(lines.next().unwrap().ends_with(",onewayatob"));
}
