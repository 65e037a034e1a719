//! Run configuration: command-line flags over config-file values over preset
//! values over built-in defaults.
//!
//! The config file is flat TOML whose keys are the flag names without the
//! leading dashes (`rho-f = 1.0`, `K = "10:100:10"`). Unknown keys are
//! rejected. `MIMO_CONVERGE_SEED` supplies the seed when neither a flag nor
//! the file does.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, ValueEnum};
use mimo_converge::channel::CorrelationSpec;
use mimo_converge::montecarlo::{MetricsSource, Scenario, StatSelection, Sweep, DEFAULT_TRIALS};
use mimo_converge::power::PowerProfile;
use serde::Deserialize;

use crate::presets::Preset;
use crate::CliError;

pub const SEED_ENV: &str = "MIMO_CONVERGE_SEED";
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_BETA_MIN: f64 = 0.1;
pub const DEFAULT_BETA_MAX: f64 = 1.0;
pub const DEFAULT_ETA: f64 = 0.5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
pub enum Mode {
    #[value(name = "fixed-K", alias = "fixed-k")]
    #[serde(rename = "fixed-K", alias = "fixed-k")]
    FixedK,
    #[value(name = "fixed-alpha")]
    #[serde(rename = "fixed-alpha")]
    FixedAlpha,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricsOn {
    /// `W` from the small-scale channel `H`.
    H,
    /// `W` from the effective channel `G = H D^{1/2}`.
    G,
}

/// A list of positive integers: `10`, `10,50`, `10:100:10` (inclusive) or
/// any comma-separated mix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntList(pub Vec<usize>);

impl std::str::FromStr for IntList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let parts: Vec<&str> = item.split(':').collect();
            let num = |t: &str| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("not a non-negative integer: {t:?}"))
            };
            match parts.as_slice() {
                [v] => out.push(num(v)?),
                [a, b, step] => {
                    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
                    if step == 0 || b < a {
                        return Err(format!("bad range {item:?}; expected start:stop:step with step > 0"));
                    }
                    out.extend((a..=b).step_by(step));
                }
                _ => return Err(format!("bad list item {item:?}")),
            }
        }
        if out.is_empty() {
            return Err("empty list".into());
        }
        Ok(IntList(out))
    }
}

impl<'de> Deserialize<'de> for IntList {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(usize),
            Many(Vec<usize>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::One(v) => Ok(IntList(vec![v])),
            Raw::Many(v) if !v.is_empty() => Ok(IntList(v)),
            Raw::Many(_) => Err(serde::de::Error::custom("empty list")),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Comma-separated statistic groups: `mad`, `lambda_ratio`,
/// `diagonal_dominance`, `zf`, `mf`, or the aliases `metrics`,
/// `precoders`, `all`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StatList(pub StatSelection);

impl std::str::FromStr for StatList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut sel = StatSelection::NONE;
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match item {
                "mad" => sel.mad = true,
                "lambda_ratio" => sel.lambda_ratio = true,
                "diagonal_dominance" => sel.diagonal_dominance = true,
                "zf" => sel.zf = true,
                "mf" => sel.mf = true,
                "metrics" => {
                    sel.mad = true;
                    sel.lambda_ratio = true;
                    sel.diagonal_dominance = true;
                }
                "precoders" => {
                    sel.zf = true;
                    sel.mf = true;
                }
                "all" => sel = StatSelection::ALL,
                other => return Err(format!("unknown statistic group {other:?}")),
            }
        }
        if sel == StatSelection::NONE {
            return Err("no statistics selected".into());
        }
        Ok(StatList(sel))
    }
}

impl<'de> Deserialize<'de> for StatList {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// One configuration layer; every key optional.
#[derive(Clone, Debug, Default, PartialEq, Parser, Deserialize)]
#[command(name = "mimo-converge", version, about = "Massive MIMO convergence sweeps")]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// Flat TOML file with the same keys as the flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Figure preset; fixes everything except seed and trials.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,

    #[arg(long, value_enum)]
    pub mode: Option<Mode>,

    /// Users: one value in fixed-K mode, a sweep in fixed-alpha mode.
    #[arg(long = "K", value_name = "LIST")]
    #[serde(rename = "K")]
    pub k: Option<IntList>,

    /// Antenna sweep (fixed-K mode).
    #[arg(long = "M", value_name = "LIST")]
    #[serde(rename = "M")]
    pub m: Option<IntList>,

    /// Antenna ratio M/K (fixed-alpha mode).
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Transmit SNR, linear scale.
    #[arg(long)]
    pub rho_f: Option<f64>,

    /// Adjacent-antenna correlation of the exponential model.
    #[arg(long)]
    pub corr_rho: Option<f64>,

    #[arg(long)]
    pub spacing: Option<f64>,

    #[arg(long)]
    pub beta_min: Option<f64>,

    #[arg(long)]
    pub beta_max: Option<f64>,

    #[arg(long)]
    pub eta: Option<f64>,

    #[arg(long)]
    pub trials: Option<u64>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,

    /// Output file (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Statistics to collect, e.g. `metrics`, `zf,mf`.
    #[arg(long, value_name = "LIST")]
    pub stats: Option<StatList>,

    /// Gram matrix used for the convergence metrics.
    #[arg(long, value_enum)]
    pub metrics_on: Option<MetricsOn>,
}

impl Settings {
    /// `higher` wins wherever it has a value.
    pub fn overlay(self, higher: Settings) -> Settings {
        Settings {
            config: higher.config.or(self.config),
            preset: higher.preset.or(self.preset),
            mode: higher.mode.or(self.mode),
            k: higher.k.or(self.k),
            m: higher.m.or(self.m),
            alpha: higher.alpha.or(self.alpha),
            rho_f: higher.rho_f.or(self.rho_f),
            corr_rho: higher.corr_rho.or(self.corr_rho),
            spacing: higher.spacing.or(self.spacing),
            beta_min: higher.beta_min.or(self.beta_min),
            beta_max: higher.beta_max.or(self.beta_max),
            eta: higher.eta.or(self.eta),
            trials: higher.trials.or(self.trials),
            seed: higher.seed.or(self.seed),
            workers: higher.workers.or(self.workers),
            output: higher.output.or(self.output),
            format: higher.format.or(self.format),
            stats: higher.stats.or(self.stats),
            metrics_on: higher.metrics_on.or(self.metrics_on),
        }
    }

    pub fn from_toml(text: &str) -> Result<Settings, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config file: {e}")))
    }

    /// Scenario keys that are set, by their flag names.
    fn scenario_keys(&self) -> Vec<&'static str> {
        [
            ("mode", self.mode.is_some()),
            ("K", self.k.is_some()),
            ("M", self.m.is_some()),
            ("alpha", self.alpha.is_some()),
            ("rho-f", self.rho_f.is_some()),
            ("corr-rho", self.corr_rho.is_some()),
            ("spacing", self.spacing.is_some()),
            ("beta-min", self.beta_min.is_some()),
            ("beta-max", self.beta_max.is_some()),
            ("eta", self.eta.is_some()),
            ("stats", self.stats.is_some()),
            ("metrics-on", self.metrics_on.is_some()),
        ]
        .into_iter()
        .filter_map(|(k, set)| set.then_some(k))
        .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub scenarios: Vec<Scenario>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub workers: Option<usize>,
}

fn conflict(a: &str, b: &str, why: &str) -> CliError {
    CliError::Usage(format!("'{a}' and '{b}' cannot be combined: {why}"))
}

/// Parses argv (program name first), reads `--config` if given and the seed
/// environment variable. `--help` and `--version` print and exit.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let flags = match Settings::try_parse_from(argv) {
        Ok(f) => f,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    let file = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            Some(Settings::from_toml(&text)?)
        }
        None => None,
    };
    let env_seed = match std::env::var(SEED_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?,
        ),
        Err(_) => None,
    };
    resolve(flags, file, env_seed)
}

/// Merges the layers and builds the scenarios.
pub fn resolve(flags: Settings, file: Option<Settings>, env_seed: Option<u64>) -> Result<RunConfig, CliError> {
    let s = file.unwrap_or_default().overlay(flags);
    let seed = s.seed.or(env_seed).unwrap_or(DEFAULT_SEED);
    let trials = s.trials.unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(CliError::Usage("'trials' must be positive".into()));
    }
    if s.workers == Some(0) {
        return Err(CliError::Usage("'workers' must be positive".into()));
    }

    let scenarios = match s.preset {
        Some(preset) => {
            if let Some(key) = s.scenario_keys().first() {
                return Err(conflict(
                    "preset",
                    key,
                    "a preset fixes every scenario key except seed and trials",
                ));
            }
            preset.scenarios(trials, seed)
        }
        None => vec![explicit_scenario(&s, trials, seed)?],
    };

    Ok(RunConfig {
        preset: s.preset,
        scenarios,
        output: s.output,
        format: s.format.unwrap_or_default(),
        workers: s.workers,
    })
}

fn explicit_scenario(s: &Settings, trials: u64, seed: u64) -> Result<Scenario, CliError> {
    let mode = match (s.mode, s.alpha.is_some(), s.m.is_some()) {
        (Some(m), _, _) => m,
        (None, true, true) => return Err(conflict("alpha", "M", "alpha fixes M = alpha * K")),
        (None, true, false) => Mode::FixedAlpha,
        (None, false, true) => Mode::FixedK,
        (None, false, false) => {
            return Err(CliError::Usage(
                "give --preset, or --mode with --K and --M/--alpha".into(),
            ))
        }
    };
    let k = s.k.as_ref().ok_or_else(|| CliError::Usage("'K' is required".into()))?;

    let sweep = match mode {
        Mode::FixedK => {
            if s.alpha.is_some() {
                return Err(conflict("mode", "alpha", "fixed-K mode sweeps M directly"));
            }
            let [k] = k.0.as_slice() else {
                return Err(CliError::Usage(format!(
                    "fixed-K mode takes a single 'K', got {:?}",
                    k.0
                )));
            };
            let m =
                s.m.as_ref()
                    .ok_or_else(|| CliError::Usage("fixed-K mode needs 'M'".into()))?;
            Sweep::FixedK {
                k: *k,
                m_values: m.0.clone(),
            }
        }
        Mode::FixedAlpha => {
            if s.m.is_some() {
                return Err(conflict("mode", "M", "fixed-alpha mode derives M = alpha * K"));
            }
            let alpha = s
                .alpha
                .ok_or_else(|| CliError::Usage("fixed-alpha mode needs 'alpha'".into()))?;
            Sweep::FixedAlpha {
                alpha,
                k_values: k.0.clone(),
            }
        }
    };

    let correlation = match (s.corr_rho, s.spacing) {
        (Some(rho), spacing) => Some(
            CorrelationSpec::new(rho, spacing.unwrap_or(CorrelationSpec::DEFAULT_SPACING))
                .map_err(|e| CliError::Usage(e.to_string()))?,
        ),
        (None, Some(_)) => return Err(conflict("spacing", "corr-rho", "spacing needs a correlation")),
        (None, None) => None,
    };

    let profile = if s.beta_min.is_some() || s.beta_max.is_some() {
        Some(
            PowerProfile::new(
                s.beta_min.unwrap_or(DEFAULT_BETA_MIN),
                s.beta_max.unwrap_or(DEFAULT_BETA_MAX),
                s.eta.unwrap_or(DEFAULT_ETA),
            )
            .map_err(|e| CliError::Usage(e.to_string()))?,
        )
    } else if s.eta.is_some() {
        return Err(conflict("eta", "beta-min", "eta only shapes an unequal-power profile"));
    } else {
        None
    };

    Ok(Scenario {
        sweep,
        correlation,
        profile,
        rho_f: s.rho_f.unwrap_or(1.0),
        trials,
        seed,
        stats: s.stats.map(|l| l.0).unwrap_or(StatSelection::ALL),
        metrics_source: match s.metrics_on {
            Some(MetricsOn::G) => MetricsSource::Effective,
            _ => MetricsSource::Channel,
        },
    })
}
