//! Run configuration: command-line flags layered over an optional
//! `key = value` file, layered over defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use eprsteer_core::homodyne::{DEFAULT_SAMPLES, DEFAULT_TRIALS};
use eprsteer_core::sweep::DEFAULT_POINTS;
use eprsteer_core::{AxisRange, ChannelSpec, SweepAxis, TmssSpec, TwoModeCovariance};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SQUEEZING_DB: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        <Format as ValueEnum>::from_str(s, true)
            .map_err(|_| CliError::usage(format!("unknown format '{s}' (csv | json)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureName {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

/// Flags shared by every subcommand. All are optional so that values can
/// fall through to the config file and then to defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Squeezing of the initial state in dB (magnitude below shot noise).
    #[arg(long, global = true, value_name = "DB", allow_negative_numbers = true)]
    pub state_db: Option<f64>,

    /// Squeezing parameter r of the initial state.
    #[arg(
        long,
        global = true,
        value_name = "R",
        conflicts_with = "state_db",
        allow_negative_numbers = true
    )]
    pub state_r: Option<f64>,

    /// Anti-squeezing excess noise.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta: Option<f64>,

    /// Target purity of the initial state; solves for the excess noise.
    #[arg(
        long,
        global = true,
        conflicts_with = "delta",
        allow_negative_numbers = true
    )]
    pub purity: Option<f64>,

    /// Covariance matrix file (JSON or whitespace text) used instead of a
    /// generated squeezed state.
    #[arg(long, global = true, value_name = "FILE", conflicts_with_all = ["state_db", "state_r", "delta", "purity"])]
    pub matrix: Option<PathBuf>,

    /// Channel on mode B, e.g. `lossy:eta=0.5` or `revival:eta=0.6,g=5,T=0.9,gan=auto`.
    #[arg(long, global = true)]
    pub channel: Option<String>,

    /// Primary sweep axis as `axis:min:max[:points]`.
    #[arg(long, global = true, value_name = "SPEC")]
    pub sweep: Option<String>,

    /// Second sweep axis as `axis:min:max[:points]`.
    #[arg(long, global = true, value_name = "SPEC")]
    pub grid: Option<String>,

    /// Output file, or directory for `figure`.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true)]
    pub trials: Option<usize>,

    /// Homodyne samples per trial.
    #[arg(long, global = true)]
    pub samples: Option<usize>,

    /// Standard deviation of the relative phase jitter, in degrees.
    #[arg(long, global = true, value_name = "DEG", allow_negative_numbers = true)]
    pub theta_deg: Option<f64>,

    /// Config file of `key = value` lines; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

const KEYS: [&str; 14] = [
    "state-db",
    "state-r",
    "delta",
    "purity",
    "matrix",
    "channel",
    "sweep",
    "grid",
    "out",
    "format",
    "seed",
    "trials",
    "samples",
    "theta-deg",
];

/// Parses the flat config format: one `key = value` per line, `#` starts a
/// comment, keys match the long flag names (`_` and `-` are interchangeable).
pub fn parse_config_file(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::usage(format!("config line {}: expected key = value", n + 1))
        })?;
        let key = k.trim().replace('_', "-").to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::usage(format!(
                "config line {}: unknown key '{}'",
                n + 1,
                k.trim()
            )));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::usage(format!(
                "config line {}: duplicate key '{key}'",
                n + 1
            )));
        }
    }
    Ok(out)
}

fn file_value<T: FromStr>(file: &BTreeMap<String, String>, key: &str) -> CliResult<Option<T>>
where
    T::Err: std::fmt::Display,
{
    file.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|e| CliError::usage(format!("config key '{key}': {e}")))
        })
        .transpose()
}

/// Source of the initial state.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSource {
    Tmss(TmssSpec),
    Matrix(TwoModeCovariance),
}

impl StateSource {
    pub fn covariance(&self) -> TwoModeCovariance {
        match self {
            StateSource::Tmss(s) => s.build(),
            StateSource::Matrix(m) => *m,
        }
    }

    pub fn tmss(&self) -> CliResult<TmssSpec> {
        match self {
            StateSource::Tmss(s) => Ok(*s),
            StateSource::Matrix(_) => Err(CliError::usage(
                "this command needs a generated state (--state-db/--state-r), not --matrix",
            )),
        }
    }
}

/// A sweep axis with its range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepArg {
    pub axis: SweepAxis,
    pub range: AxisRange,
}

impl FromStr for SweepArg {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(CliError::usage(format!(
                "sweep '{s}': expected axis:min:max[:points]"
            )));
        }
        let axis: SweepAxis = parts[0]
            .parse()
            .map_err(|e| CliError::usage(format!("sweep '{s}': {e}")))?;
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| CliError::usage(format!("sweep '{s}': '{t}' is not a number")))
        };
        let points = match parts.get(3) {
            Some(p) => p
                .parse::<usize>()
                .map_err(|_| CliError::usage(format!("sweep '{s}': '{p}' is not a point count")))?,
            None => DEFAULT_POINTS,
        };
        let range = AxisRange::new(num(parts[1])?, num(parts[2])?, points)?;
        Ok(SweepArg { axis, range })
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub state: StateSource,
    pub channel: Option<ChannelSpec>,
    pub sweep: Option<SweepArg>,
    pub grid: Option<SweepArg>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub trials: usize,
    pub samples: usize,
    pub theta_deg: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            state: StateSource::Tmss(
                TmssSpec::from_db(DEFAULT_SQUEEZING_DB, 0.0).expect("valid default"),
            ),
            channel: None,
            sweep: None,
            grid: None,
            out: None,
            format: Format::Json,
            seed: 0,
            trials: DEFAULT_TRIALS,
            samples: DEFAULT_SAMPLES,
            theta_deg: 0.0,
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("reading {}", path.display()), e))
}

impl RunConfig {
    /// Resolves flags over the config file (if any) over defaults.
    pub fn resolve(args: &CommonArgs) -> CliResult<Self> {
        let file = match &args.config {
            Some(p) => parse_config_file(&read(p)?)?,
            None => BTreeMap::new(),
        };
        Self::layer(args, &file)
    }

    /// Layers `args` over an already parsed config map.
    pub fn layer(args: &CommonArgs, file: &BTreeMap<String, String>) -> CliResult<Self> {
        let d = RunConfig::default();

        // The state is chosen as a group: any state flag on the command line
        // hides every state key from the file.
        let cli_state = args.state_db.is_some() || args.state_r.is_some() || args.matrix.is_some();
        let (state_db, state_r, matrix) = if cli_state {
            (args.state_db, args.state_r, args.matrix.clone())
        } else {
            (
                file_value::<f64>(file, "state-db")?,
                file_value::<f64>(file, "state-r")?,
                file.get("matrix").map(PathBuf::from),
            )
        };
        let cli_noise = args.delta.is_some() || args.purity.is_some();
        let (delta, purity) = if cli_noise || args.matrix.is_some() {
            (args.delta, args.purity)
        } else {
            (
                file_value::<f64>(file, "delta")?,
                file_value::<f64>(file, "purity")?,
            )
        };
        let state = resolve_state(state_db, state_r, delta, purity, matrix.as_deref())?;

        let channel = match args
            .channel
            .clone()
            .or_else(|| file.get("channel").cloned())
        {
            Some(s) => Some(s.parse::<ChannelSpec>()?),
            None => None,
        };
        let sweep = match args.sweep.clone().or_else(|| file.get("sweep").cloned()) {
            Some(s) => Some(s.parse()?),
            None => None,
        };
        let grid = match args.grid.clone().or_else(|| file.get("grid").cloned()) {
            Some(s) => Some(s.parse()?),
            None => None,
        };
        let out = args
            .out
            .clone()
            .or_else(|| file.get("out").map(PathBuf::from));
        let format = match args.format {
            Some(f) => f,
            None => file_value::<Format>(file, "format")?.unwrap_or(d.format),
        };
        let seed = args.seed.or(file_value(file, "seed")?).unwrap_or(d.seed);
        let trials = args
            .trials
            .or(file_value(file, "trials")?)
            .unwrap_or(d.trials);
        let samples = args
            .samples
            .or(file_value(file, "samples")?)
            .unwrap_or(d.samples);
        let theta_deg = args
            .theta_deg
            .or(file_value(file, "theta-deg")?)
            .unwrap_or(d.theta_deg);
        if !(theta_deg.is_finite() && theta_deg >= 0.0) {
            return Err(eprsteer_core::Error::Domain(format!(
                "theta-deg must be >= 0, got {theta_deg}"
            ))
            .into());
        }

        Ok(RunConfig {
            state,
            channel,
            sweep,
            grid,
            out,
            format,
            seed,
            trials,
            samples,
            theta_deg,
        })
    }
}

fn resolve_state(
    state_db: Option<f64>,
    state_r: Option<f64>,
    delta: Option<f64>,
    purity: Option<f64>,
    matrix: Option<&Path>,
) -> CliResult<StateSource> {
    if let Some(path) = matrix {
        if state_db.is_some() || state_r.is_some() || delta.is_some() || purity.is_some() {
            return Err(CliError::usage(
                "matrix cannot be combined with state parameters",
            ));
        }
        let m: TwoModeCovariance = read(path)?.parse()?;
        return Ok(StateSource::Matrix(m));
    }
    let r = match (state_db, state_r) {
        (Some(_), Some(_)) => {
            return Err(CliError::usage("give either state-db or state-r, not both"))
        }
        (Some(db), None) => eprsteer_core::db_to_r(db)?,
        (None, Some(r)) => r,
        (None, None) => eprsteer_core::db_to_r(DEFAULT_SQUEEZING_DB)?,
    };
    let spec = match (delta, purity) {
        (Some(_), Some(_)) => return Err(CliError::usage("give either delta or purity, not both")),
        (Some(d), None) => TmssSpec::new(r, d)?,
        (None, Some(mu)) => TmssSpec::with_purity(r, mu)?,
        (None, None) => TmssSpec::pure(r)?,
    };
    Ok(StateSource::Tmss(spec))
}
