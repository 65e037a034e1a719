//! Long-format result records and their CSV/JSON encodings.
//!
//! One record per sweep point and statistic; every record repeats the
//! scenario parameters. CSV writes statistics with 17 significant digits
//! and configuration echoes in shortest round-trip form. Absent values are
//! empty cells in CSV and `null` in JSON; non-finite statistics are written
//! as `inf`, `-inf` or `NaN` (strings in JSON).

use std::io::Write;

use mimo_converge::montecarlo::{Statistic, SweepResult};
use serde::{Deserialize, Serialize};

use crate::config::{Format, RunConfig};
use crate::CliError;

pub const CSV_HEADER: [&str; 18] = [
    "M",
    "K",
    "alpha",
    "mode",
    "statistic",
    "mean",
    "std",
    "stderr",
    "trials",
    "limit",
    "seed",
    "rho_f",
    "corr_rho",
    "spacing",
    "beta_min",
    "beta_max",
    "eta",
    "degenerate_trials",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub alpha: f64,
    pub mode: String,
    pub statistic: Statistic,
    #[serde(with = "lenient_f64")]
    pub mean: f64,
    #[serde(with = "lenient_f64")]
    pub std: f64,
    #[serde(with = "lenient_f64")]
    pub stderr: f64,
    pub trials: u64,
    pub limit: Option<f64>,
    pub seed: u64,
    pub rho_f: f64,
    pub corr_rho: Option<f64>,
    pub spacing: Option<f64>,
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    pub eta: Option<f64>,
    pub degenerate_trials: u64,
}

/// f64 that may be non-finite: numbers stay numbers, the rest become strings.
mod lenient_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&super::float_text(*v))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => t.parse().map_err(|_| de::Error::custom(format!("not a number: {t:?}"))),
        }
    }
}

fn float_text(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

fn opt_float_text(v: Option<f64>) -> String {
    v.map(float_text).unwrap_or_default()
}

fn opt_echo(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Flattens a sweep result into records, point by point in sweep order.
pub fn records(result: &SweepResult) -> Vec<OutputRecord> {
    let sc = &result.scenario;
    let mode = sc.sweep.mode_name().to_string();
    let profile = sc.profile;
    result
        .points
        .iter()
        .flat_map(|p| {
            let mode = mode.clone();
            p.summaries.iter().map(move |s| OutputRecord {
                m: p.m,
                k: p.k,
                alpha: p.alpha,
                mode: mode.clone(),
                statistic: s.statistic,
                mean: s.mean,
                std: s.std,
                stderr: s.stderr,
                trials: s.trials,
                limit: s.limit,
                seed: sc.seed,
                rho_f: sc.rho_f,
                corr_rho: sc.correlation.map(|c| c.rho()),
                spacing: sc.correlation.map(|c| c.spacing()),
                beta_min: profile.map(|p| p.beta_min()),
                beta_max: profile.map(|p| p.beta_max()),
                eta: profile.map(|p| p.eta()),
                degenerate_trials: p.degenerate_trials,
            })
        })
        .collect()
}

fn csv_row(r: &OutputRecord) -> [String; 18] {
    [
        r.m.to_string(),
        r.k.to_string(),
        r.alpha.to_string(),
        r.mode.clone(),
        r.statistic.to_string(),
        float_text(r.mean),
        float_text(r.std),
        float_text(r.stderr),
        r.trials.to_string(),
        opt_float_text(r.limit),
        r.seed.to_string(),
        r.rho_f.to_string(),
        opt_echo(r.corr_rho),
        opt_echo(r.spacing),
        opt_echo(r.beta_min),
        opt_echo(r.beta_max),
        opt_echo(r.eta),
        r.degenerate_trials.to_string(),
    ]
}

/// Encodes all results in the requested format.
pub fn render(results: &[SweepResult], format: Format) -> Vec<u8> {
    let rows: Vec<OutputRecord> = results.iter().flat_map(records).collect();
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER).expect("in-memory write");
            for r in &rows {
                w.write_record(csv_row(r)).expect("in-memory write");
            }
            w.into_inner().expect("in-memory flush")
        }
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(&rows).expect("records serialize");
            out.push(b'\n');
            out
        }
    }
}

/// Parses records written by [`render`] in JSON format.
pub fn parse_json(bytes: &[u8]) -> Result<Vec<OutputRecord>, serde_json::Error> {
    serde_json::from_slice(bytes)
}

/// Writes the results to the configured path, or stdout when none is set.
pub fn emit(results: &[SweepResult], config: &RunConfig) -> Result<(), CliError> {
    let bytes = render(results, config.format);
    match &config.output {
        Some(path) => std::fs::write(path, &bytes).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}
