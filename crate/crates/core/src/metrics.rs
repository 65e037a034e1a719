//! Distance of the normalized Gram matrix `W` from the identity.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{hermitian_eigenvalues, ComplexMatrix, HermitianMatrix, C64, SINGULAR_RTOL};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceMetrics {
    pub mad: f64,
    pub lambda_ratio: f64,
    /// `f64::INFINITY` when `W` has no nonzero off-diagonal entry.
    pub diagonal_dominance: f64,
}

/// `E = W - I`
pub fn deviation_matrix(w: &HermitianMatrix) -> ComplexMatrix {
    let n = w.dim();
    ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            w[(i, j)] - C64::new(1.0, 0.0)
        } else {
            w[(i, j)]
        }
    })
}

/// Mean of `|E_ij|` over all `K^2` entries, diagonal included.
pub fn mad(e: &ComplexMatrix) -> Result<f64> {
    if !e.is_square() {
        return Err(invalid(format!(
            "deviation matrix must be square, got {}x{}",
            e.rows(),
            e.cols()
        )));
    }
    let n = e.rows() as f64;
    Ok(e.as_slice().iter().map(|z| z.norm()).sum::<f64>() / (n * n))
}

/// `lambda_max / lambda_min`
pub fn lambda_ratio(w: &HermitianMatrix) -> Result<f64> {
    let ev = hermitian_eigenvalues(w)?;
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if lo.is_nan() || lo <= SINGULAR_RTOL * hi {
        return Err(Error::Singular(format!(
            "smallest eigenvalue {lo:e} against largest {hi:e}"
        )));
    }
    Ok(hi / lo)
}

/// `tr(W) / sum_{i != j} |W_ij|`, or `+inf` when every off-diagonal entry is
/// exactly zero (including `K = 1`).
pub fn diagonal_dominance(w: &HermitianMatrix) -> f64 {
    let n = w.dim();
    let mut off = 0.0;
    for j in 0..n {
        for i in 0..j {
            off += w[(i, j)].norm();
        }
    }
    if off == 0.0 {
        f64::INFINITY
    } else {
        w.trace() / (2.0 * off)
    }
}

pub fn convergence_metrics(w: &HermitianMatrix) -> Result<ConvergenceMetrics> {
    Ok(ConvergenceMetrics {
        mad: mad(&deviation_matrix(w))?,
        lambda_ratio: lambda_ratio(w)?,
        diagonal_dominance: diagonal_dominance(w),
    })
}
