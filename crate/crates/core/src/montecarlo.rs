//! Sweep harness for the two growth regimes: fixed `K` with `M` increasing,
//! and fixed `alpha = M / K` with both increasing.
//!
//! Trial `t` of every sweep point draws its channel from stream `t` of the
//! scenario seed. Per-trial outcomes are collected in trial order and reduced
//! sequentially, so serial and parallel runs produce identical bits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, CorrelationSpec, RngStream};
use crate::error::{Error, Result};
use crate::metrics::{deviation_matrix, diagonal_dominance, lambda_ratio, mad};
use crate::numerics::{gram_normalized, HermitianMatrix};
use crate::power::{limiting_moments, link_gains, LimitingMoments, LinkGains, PowerProfile};
use crate::precoding::{mf_sinr_from_gram, mf_sinr_limit, zf_snr_from_gram, zf_snr_limit, SystemParams};

/// Stream offset for the single retry of a trial whose sample was singular.
pub const RETRY_STREAM_BIT: u64 = 1 << 63;

pub const DEFAULT_TRIALS: u64 = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Sweep {
    FixedK { k: usize, m_values: Vec<usize> },
    FixedAlpha { alpha: f64, k_values: Vec<usize> },
}

impl Sweep {
    pub fn mode_name(&self) -> &'static str {
        match self {
            Sweep::FixedK { .. } => "fixed-K",
            Sweep::FixedAlpha { .. } => "fixed-alpha",
        }
    }
}

/// Which statistics a scenario collects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatSelection {
    pub mad: bool,
    pub lambda_ratio: bool,
    pub diagonal_dominance: bool,
    pub zf: bool,
    pub mf: bool,
}

impl StatSelection {
    pub const ALL: Self = Self {
        mad: true,
        lambda_ratio: true,
        diagonal_dominance: true,
        zf: true,
        mf: true,
    };
    pub const NONE: Self = Self {
        mad: false,
        lambda_ratio: false,
        diagonal_dominance: false,
        zf: false,
        mf: false,
    };
    pub const METRICS: Self = Self {
        zf: false,
        mf: false,
        ..Self::ALL
    };
    pub const PRECODERS: Self = Self {
        zf: true,
        mf: true,
        ..Self::NONE
    };

    fn any_metric(&self) -> bool {
        self.mad || self.lambda_ratio || self.diagonal_dominance
    }
}

/// Which Gram matrix the convergence metrics are computed on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricsSource {
    /// `W = H^H H / M`, the small-scale channel only.
    #[default]
    Channel,
    /// `G^H G / M`, including the link gains.
    Effective,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub sweep: Sweep,
    pub correlation: Option<CorrelationSpec>,
    /// `None` means equal unit gains.
    pub profile: Option<PowerProfile>,
    pub rho_f: f64,
    pub trials: u64,
    pub seed: u64,
    pub stats: StatSelection,
    pub metrics_source: MetricsSource,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepPoint {
    pub m: usize,
    pub k: usize,
}

impl Scenario {
    pub fn new(sweep: Sweep) -> Self {
        Self {
            sweep,
            correlation: None,
            profile: None,
            rho_f: 1.0,
            trials: DEFAULT_TRIALS,
            seed: 0,
            stats: StatSelection::ALL,
            metrics_source: MetricsSource::Channel,
        }
    }

    /// Sweep points after validating the whole scenario.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return cfg("trials must be positive".into());
        }
        if !(self.rho_f > 0.0 && self.rho_f.is_finite()) {
            return cfg(format!("rho-f must be positive, got {}", self.rho_f));
        }
        let values = match &self.sweep {
            Sweep::FixedK { m_values, .. } => m_values,
            Sweep::FixedAlpha { k_values, .. } => k_values,
        };
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return cfg(format!("sweep must be strictly increasing, got {values:?}"));
        }
        if values.first() == Some(&0) {
            return cfg("sweep values must be positive".into());
        }
        let points: Vec<SweepPoint> = match &self.sweep {
            Sweep::FixedK { k, m_values } => {
                if *k == 0 {
                    return cfg("K must be positive".into());
                }
                m_values.iter().map(|&m| SweepPoint { m, k: *k }).collect()
            }
            Sweep::FixedAlpha { alpha, k_values } => {
                if !(*alpha > 1.0 && alpha.is_finite()) {
                    return cfg(format!("alpha must exceed 1 in fixed-alpha mode, got {alpha}"));
                }
                let mut pts = Vec::with_capacity(k_values.len());
                for &k in k_values {
                    let m = alpha * k as f64;
                    let rounded = m.round();
                    if (m - rounded).abs() > 1e-9 * m {
                        return cfg(format!("alpha * K = {alpha} * {k} is not an integer antenna count"));
                    }
                    pts.push(SweepPoint { m: rounded as usize, k });
                }
                pts
            }
        };
        for p in &points {
            if self.stats.zf && p.m <= p.k {
                return cfg(format!("zero-forcing needs M > K, sweep point has M={} K={}", p.m, p.k));
            }
            if self.stats.lambda_ratio && p.m < p.k {
                return cfg(format!(
                    "lambda ratio needs M >= K, sweep point has M={} K={}",
                    p.m, p.k
                ));
            }
        }
        Ok(points)
    }

    pub fn gains(&self, k: usize) -> Result<LinkGains> {
        match &self.profile {
            Some(p) => link_gains(k, p),
            None => Ok(LinkGains::equal(k)),
        }
    }

    pub fn moments(&self) -> LimitingMoments {
        self.profile
            .as_ref()
            .map(limiting_moments)
            .unwrap_or(LimitingMoments::EQUAL_POWER)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Statistic {
    Mad,
    LambdaRatio,
    DiagonalDominance,
    ZfSnr,
    MfSinrMean,
    /// Zero-based user index; printed one-based.
    MfSinrUser(usize),
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::Mad => f.write_str("mad"),
            Statistic::LambdaRatio => f.write_str("lambda_ratio"),
            Statistic::DiagonalDominance => f.write_str("diagonal_dominance"),
            Statistic::ZfSnr => f.write_str("zf_snr"),
            Statistic::MfSinrMean => f.write_str("mf_sinr_mean"),
            Statistic::MfSinrUser(i) => write!(f, "mf_sinr_user_{}", i + 1),
        }
    }
}

impl FromStr for Statistic {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "mad" => Statistic::Mad,
            "lambda_ratio" => Statistic::LambdaRatio,
            "diagonal_dominance" => Statistic::DiagonalDominance,
            "zf_snr" => Statistic::ZfSnr,
            "mf_sinr_mean" => Statistic::MfSinrMean,
            other => {
                let user = other
                    .strip_prefix("mf_sinr_user_")
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| format!("unknown statistic {other:?}"))?;
                Statistic::MfSinrUser(user - 1)
            }
        })
    }
}

impl From<Statistic> for String {
    fn from(s: Statistic) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for Statistic {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

/// Sample mean, sample standard deviation and standard error of one
/// statistic at one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub statistic: Statistic,
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
    pub trials: u64,
    pub limit: Option<f64>,
}

impl Summary {
    /// Two-pass mean and variance in slice order. A single trial reports zero
    /// spread; any infinite value makes the mean infinite and the spread NaN.
    pub fn from_values(statistic: Statistic, values: &[f64], limit: Option<f64>) -> Self {
        let n = values.len();
        let trials = n as u64;
        if values.iter().any(|v| !v.is_finite()) {
            let mean = values.iter().sum::<f64>() / n as f64;
            return Self {
                statistic,
                mean,
                std: f64::NAN,
                stderr: f64::NAN,
                trials,
                limit,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            statistic,
            mean,
            std,
            stderr: std / (n as f64).sqrt(),
            trials,
            limit,
        }
    }

    /// `|mean - limit| / limit`
    pub fn relative_gap(&self) -> Option<f64> {
        self.limit.map(|l| (self.mean - l).abs() / l)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub m: usize,
    pub k: usize,
    pub alpha: f64,
    /// Trials whose first sample was singular and were redrawn.
    pub degenerate_trials: u64,
    pub summaries: Vec<Summary>,
}

impl PointResult {
    pub fn get(&self, statistic: Statistic) -> Option<&Summary> {
        self.summaries.iter().find(|s| s.statistic == statistic)
    }

    pub fn mean(&self, statistic: Statistic) -> Option<f64> {
        self.get(statistic).map(|s| s.mean)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub scenario: Scenario,
    pub points: Vec<PointResult>,
}

impl SweepResult {
    pub fn point(&self, m: usize, k: usize) -> Option<&PointResult> {
        self.points.iter().find(|p| p.m == m && p.k == k)
    }
}

/// How trials are scheduled. Without the `parallel` feature every variant
/// runs serially.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Serial,
    /// Rayon's global pool.
    #[default]
    Parallel,
    /// A dedicated pool with this many threads.
    Workers(usize),
}

#[derive(Clone, Debug, Default)]
struct TrialOutcome {
    mad: f64,
    lambda_ratio: f64,
    diagonal_dominance: f64,
    zf_snr: f64,
    mf_sinr: Vec<f64>,
}

struct PointContext<'a> {
    scenario: &'a Scenario,
    model: ChannelModel,
    sqrt_gains: Vec<f64>,
    unit_gains: bool,
}

impl PointContext<'_> {
    fn evaluate(&self, stream: RngStream) -> Result<TrialOutcome> {
        let stats = &self.scenario.stats;
        let m = self.model.antennas() as f64;
        let h = self.model.sample_h(stream)?;
        let gram_h = gram_normalized(&h, 1.0)?;
        let gram_g: Option<HermitianMatrix> = if self.unit_gains {
            None
        } else {
            Some(gram_h.diagonal_congruence(&self.sqrt_gains)?)
        };
        let gram_g_ref = gram_g.as_ref().unwrap_or(&gram_h);

        let mut out = TrialOutcome::default();
        if stats.any_metric() {
            let base = match self.scenario.metrics_source {
                MetricsSource::Channel => &gram_h,
                MetricsSource::Effective => gram_g_ref,
            };
            let w = base.scaled(1.0 / m);
            if stats.mad {
                out.mad = mad(&deviation_matrix(&w))?;
            }
            if stats.lambda_ratio {
                out.lambda_ratio = lambda_ratio(&w)?;
            }
            if stats.diagonal_dominance {
                out.diagonal_dominance = diagonal_dominance(&w);
            }
        }
        if stats.zf {
            out.zf_snr = zf_snr_from_gram(gram_g_ref, self.scenario.rho_f)?;
        }
        if stats.mf {
            out.mf_sinr = mf_sinr_from_gram(gram_g_ref, self.scenario.rho_f)?;
        }
        Ok(out)
    }

    fn run_trial(&self, trial: u64) -> Result<(TrialOutcome, bool)> {
        with_retry(self.scenario.seed, trial, |stream| self.evaluate(stream)).map_err(|reason| Error::Numerical {
            m: self.model.antennas(),
            k: self.model.users(),
            trial,
            reason,
        })
    }
}

/// Evaluates trial `trial` on its own stream. A singular sample is redrawn
/// once from the disjoint stream `RETRY_STREAM_BIT | trial`; the flag reports
/// whether that happened. Any other error, or a second singular sample, is
/// returned as a message.
fn with_retry<T>(
    seed: u64,
    trial: u64,
    eval: impl Fn(RngStream) -> Result<T>,
) -> std::result::Result<(T, bool), String> {
    match eval(RngStream::new(seed, trial)) {
        Ok(o) => Ok((o, false)),
        Err(Error::Singular(_)) => eval(RngStream::new(seed, RETRY_STREAM_BIT | trial))
            .map(|o| (o, true))
            .map_err(|e| format!("singular sample, retry failed: {e}")),
        Err(e) => Err(e.to_string()),
    }
}

fn run_trials(ctx: &PointContext<'_>, exec: Execution) -> Vec<Result<(TrialOutcome, bool)>> {
    let trials = ctx.scenario.trials;
    #[cfg(feature = "parallel")]
    if exec != Execution::Serial {
        use rayon::prelude::*;
        return (0..trials).into_par_iter().map(|t| ctx.run_trial(t)).collect();
    }
    let _ = exec;
    (0..trials).map(|t| ctx.run_trial(t)).collect()
}

fn run_point(scenario: &Scenario, point: SweepPoint, moments: LimitingMoments, exec: Execution) -> Result<PointResult> {
    let gains = scenario.gains(point.k)?;
    let ctx = PointContext {
        scenario,
        model: ChannelModel::new(point.m, point.k, scenario.correlation, gains.clone())?,
        sqrt_gains: gains.sqrt(),
        unit_gains: gains.is_all_ones(),
    };

    let mut outcomes = Vec::with_capacity(scenario.trials as usize);
    let mut degenerate = 0;
    for r in run_trials(&ctx, exec) {
        let (o, retried) = r?;
        degenerate += u64::from(retried);
        outcomes.push(o);
    }

    let alpha = point.m as f64 / point.k as f64;
    let params = SystemParams::new(scenario.rho_f, alpha)?;
    let column = |f: fn(&TrialOutcome) -> f64| outcomes.iter().map(f).collect::<Vec<f64>>();
    let stats = &scenario.stats;
    let mut summaries = Vec::new();
    if stats.mad {
        summaries.push(Summary::from_values(Statistic::Mad, &column(|o| o.mad), None));
    }
    if stats.lambda_ratio {
        summaries.push(Summary::from_values(
            Statistic::LambdaRatio,
            &column(|o| o.lambda_ratio),
            None,
        ));
    }
    if stats.diagonal_dominance {
        summaries.push(Summary::from_values(
            Statistic::DiagonalDominance,
            &column(|o| o.diagonal_dominance),
            None,
        ));
    }
    if stats.zf {
        let limit = zf_snr_limit(&params, moments.mean_inv_beta).ok();
        summaries.push(Summary::from_values(Statistic::ZfSnr, &column(|o| o.zf_snr), limit));
    }
    if stats.mf {
        let user_limits: Vec<f64> = gains
            .values()
            .iter()
            .map(|&b| mf_sinr_limit(&params, b, moments.mean_beta))
            .collect::<Result<_>>()?;
        let mean_limit = user_limits.iter().sum::<f64>() / user_limits.len() as f64;
        let per_trial_mean = column(|o| o.mf_sinr.iter().sum::<f64>() / o.mf_sinr.len() as f64);
        summaries.push(Summary::from_values(
            Statistic::MfSinrMean,
            &per_trial_mean,
            Some(mean_limit),
        ));
        for (i, limit) in user_limits.into_iter().enumerate() {
            let values: Vec<f64> = outcomes.iter().map(|o| o.mf_sinr[i]).collect();
            summaries.push(Summary::from_values(Statistic::MfSinrUser(i), &values, Some(limit)));
        }
    }

    Ok(PointResult {
        m: point.m,
        k: point.k,
        alpha,
        degenerate_trials: degenerate,
        summaries,
    })
}

pub fn run_scenario(scenario: &Scenario) -> Result<SweepResult> {
    run_scenario_with(scenario, Execution::default())
}

pub fn run_scenario_with(scenario: &Scenario, exec: Execution) -> Result<SweepResult> {
    let points = scenario.points()?;
    let moments = scenario.moments();
    let run = || -> Result<SweepResult> {
        let points = points
            .iter()
            .map(|&p| run_point(scenario, p, moments, exec))
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepResult {
            scenario: scenario.clone(),
            points,
        })
    };
    #[cfg(feature = "parallel")]
    if let Execution::Workers(n) = exec {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
        return pool.install(run);
    }
    run()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitGap {
    pub m: usize,
    pub k: usize,
    pub statistic: Statistic,
    pub mean: f64,
    pub limit: f64,
    pub gap: f64,
}

/// Relative gap `|mean - limit| / limit` for every statistic that has a limit.
pub fn compare_to_limit(result: &SweepResult) -> Vec<LimitGap> {
    result
        .points
        .iter()
        .flat_map(|p| {
            p.summaries.iter().filter_map(move |s| {
                s.relative_gap().map(|gap| LimitGap {
                    m: p.m,
                    k: p.k,
                    statistic: s.statistic,
                    mean: s.mean,
                    limit: s.limit.unwrap_or(f64::NAN),
                    gap,
                })
            })
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
