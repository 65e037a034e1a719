//! Random channel generation: `G = R^{1/2} H_iid D^{1/2}`.
//!
//! `H_iid` has iid `CN(0, 1)` entries, `R` is the exponential transmit
//! correlation of a uniform linear array and `D` holds the link gains.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{psd_sqrt, ComplexMatrix, HermitianMatrix, C64};
use crate::power::LinkGains;

/// One reproducible random stream: ChaCha8 keyed by `seed`, positioned on
/// stream `stream`. The same pair yields the same draws on every platform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// `M x K` matrix of iid circularly-symmetric `CN(0, 1)` entries.
///
/// Draw order is row-major, real part before imaginary part.
pub fn sample_iid(m: usize, k: usize, stream: RngStream) -> Result<ComplexMatrix> {
    if m == 0 || k == 0 {
        return Err(invalid(format!("channel dimensions must be positive, got {m}x{k}")));
    }
    let mut rng = stream.rng();
    let entries: Vec<C64> = (0..m * k)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect();
    ComplexMatrix::from_row_slice(m, k, &entries)
}

/// Exponential correlation `r_ij = rho^(spacing * |i - j|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    rho: f64,
    spacing: f64,
}

impl CorrelationSpec {
    pub const DEFAULT_SPACING: f64 = 1.0;

    pub fn new(rho: f64, spacing: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(invalid(format!("correlation rho must lie in [0, 1), got {rho}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid(format!("antenna spacing must be positive, got {spacing}")));
        }
        Ok(Self { rho, spacing })
    }

    pub fn with_rho(rho: f64) -> Result<Self> {
        Self::new(rho, Self::DEFAULT_SPACING)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }
}

pub fn exp_correlation_matrix(m: usize, spec: &CorrelationSpec) -> Result<HermitianMatrix> {
    if m == 0 {
        return Err(invalid("array size must be positive"));
    }
    Ok(HermitianMatrix::from_upper_fn(m, |i, j| {
        let d = spec.spacing * (j - i) as f64;
        C64::new(spec.rho.powf(d), 0.0)
    }))
}

/// `R^{1/2} H_iid`.
pub fn apply_correlation(r_sqrt: &ComplexMatrix, h_iid: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !r_sqrt.is_square() || r_sqrt.cols() != h_iid.rows() {
        return Err(invalid(format!(
            "correlation root is {}x{} but channel has {} rows",
            r_sqrt.rows(),
            r_sqrt.cols(),
            h_iid.rows()
        )));
    }
    r_sqrt.matmul(h_iid)
}

/// Scales column `j` of `H` by `sqrt(beta_j)`.
pub fn assemble_g(h: &ComplexMatrix, beta: &LinkGains) -> Result<ComplexMatrix> {
    if h.cols() != beta.len() {
        return Err(invalid(format!(
            "channel has {} columns but {} link gains were given",
            h.cols(),
            beta.len()
        )));
    }
    let mut g = h.clone();
    for (j, b) in beta.values().iter().enumerate() {
        if b.is_nan() || *b <= 0.0 {
            return Err(invalid("link gains must be positive"));
        }
        if *b != 1.0 {
            let s = b.sqrt();
            g.column_mut(j).iter_mut().for_each(|z| *z *= s);
        }
    }
    Ok(g)
}

/// Principal square root of the `M x M` exponential correlation matrix.
///
/// The matrix is real, so it is stored in real form and applied to the real
/// and imaginary parts of `H_iid` with two real products.
#[derive(Debug)]
pub struct CorrelationFactor {
    spec: CorrelationSpec,
    root: DMatrix<f64>,
}

type FactorKey = (usize, u64, u64);

static FACTOR_CACHE: LazyLock<Mutex<HashMap<FactorKey, Arc<CorrelationFactor>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

impl CorrelationFactor {
    pub fn new(m: usize, spec: CorrelationSpec) -> Result<Self> {
        let r = exp_correlation_matrix(m, &spec)?;
        let root = psd_sqrt(&r)?;
        debug_assert!(root.is_real());
        Ok(Self {
            spec,
            root: root.as_nalgebra().map(|z| z.re),
        })
    }

    /// Shared factor for `(m, spec)`, computed once per process.
    pub fn cached(m: usize, spec: CorrelationSpec) -> Result<Arc<Self>> {
        let key = (m, spec.rho.to_bits(), spec.spacing.to_bits());
        if let Some(f) = FACTOR_CACHE.lock().unwrap().get(&key) {
            return Ok(Arc::clone(f));
        }
        let factor = Arc::new(Self::new(m, spec)?);
        Ok(Arc::clone(FACTOR_CACHE.lock().unwrap().entry(key).or_insert(factor)))
    }

    pub fn spec(&self) -> CorrelationSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.root.nrows()
    }

    pub fn root(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim(), self.dim(), |i, j| C64::new(self.root[(i, j)], 0.0))
    }

    pub fn apply(&self, h_iid: &ComplexMatrix) -> Result<ComplexMatrix> {
        if h_iid.rows() != self.dim() {
            return Err(invalid(format!(
                "correlation root is {0}x{0} but channel has {1} rows",
                self.dim(),
                h_iid.rows()
            )));
        }
        let (re, im) = h_iid.split_real_imag();
        Ok(ComplexMatrix::from_real_imag(&(&self.root * re), &(&self.root * im)))
    }
}

/// One channel realization with its factors.
#[derive(Clone, Debug)]
pub struct ChannelSample {
    pub h_iid: ComplexMatrix,
    pub h: ComplexMatrix,
    pub g: ComplexMatrix,
    pub beta: LinkGains,
}

/// Fixed `(M, K, correlation, gains)`; draws channel samples from streams.
#[derive(Clone, Debug)]
pub struct ChannelModel {
    m: usize,
    k: usize,
    correlation: Option<Arc<CorrelationFactor>>,
    gains: LinkGains,
}

impl ChannelModel {
    /// `rho = 0` is the identity correlation and is handled as iid.
    pub fn new(m: usize, k: usize, correlation: Option<CorrelationSpec>, gains: LinkGains) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(invalid(format!("channel dimensions must be positive, got {m}x{k}")));
        }
        if gains.len() != k {
            return Err(invalid(format!("{} link gains given for {k} users", gains.len())));
        }
        let correlation = match correlation {
            Some(spec) if spec.rho > 0.0 => Some(CorrelationFactor::cached(m, spec)?),
            _ => None,
        };
        Ok(Self {
            m,
            k,
            correlation,
            gains,
        })
    }

    pub fn antennas(&self) -> usize {
        self.m
    }

    pub fn users(&self) -> usize {
        self.k
    }

    pub fn gains(&self) -> &LinkGains {
        &self.gains
    }

    pub fn is_correlated(&self) -> bool {
        self.correlation.is_some()
    }

    /// Small-scale channel `H` only; `G` follows by column scaling.
    pub fn sample_h(&self, stream: RngStream) -> Result<ComplexMatrix> {
        let h_iid = sample_iid(self.m, self.k, stream)?;
        match &self.correlation {
            Some(f) => f.apply(&h_iid),
            None => Ok(h_iid),
        }
    }

    pub fn sample(&self, stream: RngStream) -> Result<ChannelSample> {
        let h_iid = sample_iid(self.m, self.k, stream)?;
        let h = match &self.correlation {
            Some(f) => f.apply(&h_iid)?,
            None => h_iid.clone(),
        };
        let g = assemble_g(&h, &self.gains)?;
        Ok(ChannelSample {
            h_iid,
            h,
            g,
            beta: self.gains.clone(),
        })
    }
}
