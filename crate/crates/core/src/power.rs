//! Deterministic unequal link gains.
//!
//! Gains are samples of the exponential profile `beta(x) = beta_max * eta^x`
//! taken at the midpoints of `K` equal cells covering `[0, x0]`, where
//! `eta^x0 = beta_min / beta_max`. Substituting `x0` shows the samples are
//! `beta_max * (beta_min / beta_max)^((2j - 1) / (2K))`: the decay constant
//! `eta` cancels and only the range matters. It is kept on the profile so
//! configurations round-trip, but it has no effect on the gains.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    beta_min: f64,
    beta_max: f64,
    eta: f64,
}

impl PowerProfile {
    pub fn new(beta_min: f64, beta_max: f64, eta: f64) -> Result<Self> {
        if !(beta_min > 0.0 && beta_min.is_finite() && beta_max.is_finite()) {
            return Err(invalid(format!("beta-min must be positive and finite, got {beta_min}")));
        }
        if beta_max < beta_min {
            return Err(invalid(format!(
                "beta-max ({beta_max}) must be at least beta-min ({beta_min})"
            )));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(invalid(format!("eta must lie in (0, 1), got {eta}")));
        }
        Ok(Self {
            beta_min,
            beta_max,
            eta,
        })
    }

    pub fn beta_min(&self) -> f64 {
        self.beta_min
    }

    pub fn beta_max(&self) -> f64 {
        self.beta_max
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn is_equal_power(&self) -> bool {
        self.beta_min == self.beta_max
    }

    /// Right end `x0` of the sampling interval, `log(beta_min/beta_max)/log(eta)`.
    pub fn x0(&self) -> f64 {
        (self.beta_min / self.beta_max).ln() / self.eta.ln()
    }
}

/// Per-user link gains, non-increasing in the user index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkGains(Vec<f64>);

impl LinkGains {
    /// All gains equal to one (the equal-power reference case).
    pub fn equal(k: usize) -> Self {
        Self(vec![1.0; k])
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("link gains must be non-empty"));
        }
        if !values.iter().all(|&b| b > 0.0 && b.is_finite()) {
            return Err(invalid("link gains must be positive and finite"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_all_ones(&self) -> bool {
        self.0.iter().all(|&b| b == 1.0)
    }

    /// `(1/K) sum beta_j`
    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    /// `(1/K) sum 1/beta_j`
    pub fn mean_inverse(&self) -> f64 {
        self.0.iter().map(|b| 1.0 / b).sum::<f64>() / self.0.len() as f64
    }

    pub fn sqrt(&self) -> Vec<f64> {
        self.0.iter().map(|b| b.sqrt()).collect()
    }
}

pub fn link_gains(k: usize, profile: &PowerProfile) -> Result<LinkGains> {
    if k == 0 {
        return Err(invalid("number of users must be positive"));
    }
    if profile.is_equal_power() {
        return Ok(LinkGains(vec![profile.beta_max; k]));
    }
    let ratio = profile.beta_min / profile.beta_max;
    let values = (1..=k)
        .map(|j| profile.beta_max * ratio.powf((2 * j - 1) as f64 / (2 * k) as f64))
        .collect();
    Ok(LinkGains(values))
}

/// Large-`K` limits of the gain averages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitingMoments {
    /// `lim (1/K) sum beta_j`
    pub mean_beta: f64,
    /// `lim (1/K) sum 1/beta_j`
    pub mean_inv_beta: f64,
}

impl LimitingMoments {
    pub const EQUAL_POWER: LimitingMoments = LimitingMoments {
        mean_beta: 1.0,
        mean_inv_beta: 1.0,
    };
}

/// The midpoint sums are Riemann sums of an exponential over `[0, x0]`, so
/// both limits are logarithmic means of the endpoints.
pub fn limiting_moments(profile: &PowerProfile) -> LimitingMoments {
    let (lo, hi) = (profile.beta_min, profile.beta_max);
    if profile.is_equal_power() {
        return LimitingMoments {
            mean_beta: hi,
            mean_inv_beta: 1.0 / hi,
        };
    }
    let log_ratio = ((hi - lo) / lo).ln_1p();
    LimitingMoments {
        mean_beta: (hi - lo) / log_ratio,
        mean_inv_beta: (1.0 / lo - 1.0 / hi) / log_ratio,
    }
}
