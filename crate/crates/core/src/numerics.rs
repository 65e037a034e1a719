//! Dense complex linear algebra used by the channel, metric and precoder code.
//!
//! Storage is column-major (`nalgebra::DMatrix`), which keeps each channel
//! column contiguous for the Gram products. Row-major order is only the
//! *semantic* order used by [`ComplexMatrix::from_row_slice`].

use std::ops::Index;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::error::{invalid, Error, Result};

pub type C64 = Complex<f64>;

/// Relative threshold below which a Hermitian matrix is treated as singular,
/// and below which negative eigenvalues of a PSD matrix are clamped.
pub const SINGULAR_RTOL: f64 = 1e-12;

/// Dense complex matrix with finite entries and nonzero dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    data: DMatrix<C64>,
}

impl ComplexMatrix {
    /// Panics if either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            data: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        assert!(n > 0, "matrix dimensions must be positive");
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    /// Builds a matrix entry by entry. Panics on zero dimensions; the closure
    /// must return finite values.
    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let data = DMatrix::from_fn(rows, cols, f);
        debug_assert!(data.iter().all(|z| z.is_finite()));
        Self { data }
    }

    /// Builds a matrix from entries listed row by row.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(invalid(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Self::from_nalgebra(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn from_real_row_slice(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        let entries: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_row_slice(rows, cols, &entries)
    }

    pub fn from_nalgebra(data: DMatrix<C64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(invalid("matrix dimensions must be positive"));
        }
        if !data.iter().all(|z| z.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        Ok(Self { data })
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_nalgebra(self) -> DMatrix<C64> {
        self.data
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Contiguous view of column `j`.
    pub fn column(&self, j: usize) -> &[C64] {
        let m = self.rows();
        &self.data.as_slice()[j * m..(j + 1) * m]
    }

    pub(crate) fn column_mut(&mut self, j: usize) -> &mut [C64] {
        let m = self.rows();
        &mut self.data.as_mut_slice()[j * m..(j + 1) * m]
    }

    /// Column-major entries.
    pub fn as_slice(&self) -> &[C64] {
        self.data.as_slice()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            data: self.data.map(|z| z * c),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.adjoint(),
        }
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            data: self.data.map(|z| z.conj()),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            data: self.data.transpose(),
        }
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols() != rhs.rows() {
            return Err(invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(Self {
            data: &self.data * &rhs.data,
        })
    }

    pub fn sub(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.rows() != rhs.rows() || self.cols() != rhs.cols() {
            return Err(invalid("dimension mismatch in subtraction"));
        }
        Ok(Self {
            data: &self.data - &rhs.data,
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    /// Splits into real and imaginary parts.
    pub(crate) fn split_real_imag(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.data.map(|z| z.re), self.data.map(|z| z.im))
    }

    pub(crate) fn from_real_imag(re: &DMatrix<f64>, im: &DMatrix<f64>) -> Self {
        debug_assert_eq!(re.shape(), im.shape());
        Self {
            data: DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)])),
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.data[idx]
    }
}

/// Square matrix with `a[(i, j)] == a[(j, i)].conj()` holding exactly and a
/// real diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    data: DMatrix<C64>,
}

impl HermitianMatrix {
    /// Builds the matrix from its upper triangle (`i <= j`). The lower
    /// triangle is the conjugate mirror and diagonal imaginary parts are
    /// dropped.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(dim > 0, "matrix dimensions must be positive");
        let mut data = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            for i in 0..j {
                let z = f(i, j);
                data[(i, j)] = z;
                data[(j, i)] = z.conj();
            }
            data[(j, j)] = C64::new(f(j, j).re, 0.0);
        }
        Self { data }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_upper_fn(dim, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(invalid("matrix dimensions must be positive"));
        }
        if !diag.iter().all(|x| x.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        Ok(Self::from_upper_fn(diag.len(), |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    /// Accepts a square matrix that is Hermitian up to rounding (relative
    /// asymmetry at most 1e-10) and returns its exactly Hermitian part.
    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(invalid(format!(
                "expected a square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let scale = m.as_slice().iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        let n = m.rows();
        for j in 0..n {
            for i in 0..=j {
                let skew = (m[(i, j)] - m[(j, i)].conj()).norm();
                if skew > 1e-10 * scale {
                    return Err(invalid(format!("matrix is not Hermitian at ({i}, {j})")));
                }
            }
        }
        Ok(Self::from_upper_fn(n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn to_complex_matrix(&self) -> ComplexMatrix {
        ComplexMatrix {
            data: self.data.clone(),
        }
    }

    pub fn into_complex_matrix(self) -> ComplexMatrix {
        ComplexMatrix { data: self.data }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.data[(i, i)].re).collect()
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.is_finite())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            data: self.data.map(|z| z * c),
        }
    }

    /// `D W D` for the real diagonal `D = diag(d)`.
    pub fn diagonal_congruence(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.dim() {
            return Err(invalid(format!(
                "diagonal has {} entries, matrix has dimension {}",
                d.len(),
                self.dim()
            )));
        }
        Ok(Self::from_upper_fn(self.dim(), |i, j| {
            self.data[(i, j)] * (d[i] * d[j])
        }))
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.data[idx]
    }
}

/// `A^H A / scale`.
///
/// Only the upper triangle is accumulated; the diagonal is a sum of squared
/// magnitudes and therefore exactly real and nonnegative.
pub fn gram_normalized(a: &ComplexMatrix, scale: f64) -> Result<HermitianMatrix> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(invalid(format!("Gram scale must be positive and finite, got {scale}")));
    }
    let k = a.cols();
    let inv = 1.0 / scale;
    let mut data = DMatrix::<C64>::zeros(k, k);
    for j in 0..k {
        let cj = a.column(j);
        for i in 0..j {
            let ci = a.column(i);
            let mut acc = C64::new(0.0, 0.0);
            for (x, y) in ci.iter().zip(cj) {
                acc += x.conj() * y;
            }
            let z = acc * inv;
            data[(i, j)] = z;
            data[(j, i)] = z.conj();
        }
        let norm: f64 = cj.iter().map(|z| z.norm_sqr()).sum();
        data[(j, j)] = C64::new(norm * inv, 0.0);
    }
    Ok(HermitianMatrix { data })
}

fn ensure_finite(w: &HermitianMatrix) -> Result<()> {
    if w.is_finite() {
        Ok(())
    } else {
        Err(invalid("matrix has non-finite entries"))
    }
}

fn sort_ascending(values: &mut [f64]) {
    values.sort_by(|a, b| a.total_cmp(b));
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(w: &HermitianMatrix) -> Result<Vec<f64>> {
    ensure_finite(w)?;
    let mut values: Vec<f64> = if w.is_real() {
        w.data.map(|z| z.re).symmetric_eigenvalues().iter().copied().collect()
    } else {
        w.data.symmetric_eigenvalues().iter().copied().collect()
    };
    sort_ascending(&mut values);
    Ok(values)
}

/// Eigen-decomposition `W = V diag(values) V^H`, eigenvalues ascending and
/// eigenvectors in the matching columns of `vectors`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = self.vectors.as_nalgebra();
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * self.values[j]);
        ComplexMatrix {
            data: scaled * v.adjoint(),
        }
    }
}

pub fn hermitian_eigen(w: &HermitianMatrix) -> Result<HermitianEigen> {
    ensure_finite(w)?;
    let n = w.dim();
    let (values, vectors): (Vec<f64>, DMatrix<C64>) = if w.is_real() {
        let eig = SymmetricEigen::new(w.data.map(|z| z.re));
        (
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors.map(|x| C64::new(x, 0.0)),
        )
    } else {
        let eig = SymmetricEigen::new(w.data.clone());
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = DMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok(HermitianEigen {
        values: sorted_values,
        vectors: ComplexMatrix { data: sorted_vectors },
    })
}

/// Principal square root of a positive semi-definite Hermitian matrix.
///
/// Eigenvalues in `[-1e-12 * lambda_max, 0)` are clamped to zero; anything
/// more negative is rejected. Real input takes a real-arithmetic path and
/// yields a real result.
pub fn psd_sqrt(r: &HermitianMatrix) -> Result<ComplexMatrix> {
    ensure_finite(r)?;
    let n = r.dim();
    let root_of = |values: &[f64]| -> Result<Vec<f64>> {
        let max = values.iter().copied().fold(0.0f64, f64::max);
        let tol = SINGULAR_RTOL * max;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::NotPositiveSemidefinite {
                eigenvalue: min,
                tolerance: tol,
            });
        }
        Ok(values.iter().map(|&l| l.max(0.0).sqrt()).collect())
    };

    let root: DMatrix<C64> = if r.is_real() {
        let eig = SymmetricEigen::new(r.data.map(|z| z.re));
        let s = root_of(eig.eigenvalues.as_slice())?;
        let v = &eig.eigenvectors;
        let vs = DMatrix::from_fn(n, n, |i, j| v[(i, j)] * s[j]);
        (vs * v.transpose()).map(|x| C64::new(x, 0.0))
    } else {
        let eig = SymmetricEigen::new(r.data.clone());
        let s = root_of(eig.eigenvalues.as_slice())?;
        let v = &eig.eigenvectors;
        let vs = DMatrix::from_fn(n, n, |i, j| v[(i, j)] * s[j]);
        vs * v.adjoint()
    };
    // Rounding leaves the product slightly non-Hermitian; mirror it.
    let sym = HermitianMatrix::from_upper_fn(n, |i, j| (root[(i, j)] + root[(j, i)].conj()) * 0.5);
    Ok(sym.into_complex_matrix())
}

/// `tr(W^{-1})` for Hermitian positive definite `W`, via a Cholesky factor
/// `W = L L^H` and `tr(W^{-1}) = ||L^{-1}||_F^2`.
///
/// Fails with [`Error::Singular`] when a pivot drops below `1e-12` of the
/// largest diagonal entry, or when the resulting trace bounds the condition
/// number above `1e12`.
pub fn inverse_trace(w: &HermitianMatrix) -> Result<f64> {
    ensure_finite(w)?;
    let n = w.dim();
    let a = &w.data;
    let max_diag = (0..n).map(|i| a[(i, i)].re).fold(0.0f64, f64::max);
    if max_diag <= 0.0 {
        return Err(Error::Singular("zero diagonal".into()));
    }
    let threshold = SINGULAR_RTOL * max_diag;

    // Lower factor, column-major.
    let mut l = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[k * n + j].norm_sqr();
        }
        if d.is_nan() || d <= threshold {
            return Err(Error::Singular(format!(
                "Cholesky pivot {j} is {d:e}, threshold {threshold:e}"
            )));
        }
        let ljj = d.sqrt();
        l[j * n + j] = C64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[k * n + i] * l[k * n + j].conj();
            }
            l[j * n + i] = s / ljj;
        }
    }

    // Columns of L^{-1} by forward substitution; only the squared norms are kept.
    let mut total = 0.0;
    let mut x = vec![C64::new(0.0, 0.0); n];
    for c in 0..n {
        x[..c].iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for i in c..n {
            let mut s = if i == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            for k in c..i {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i].re;
        }
        total += x[c..].iter().map(|z| z.norm_sqr()).sum::<f64>();
    }

    // lambda_min <= n / tr(W^{-1}) and lambda_max >= tr(W) / n.
    let lambda_min_upper = n as f64 / total;
    let lambda_max_lower = w.trace() / n as f64;
    if !total.is_finite() || lambda_min_upper <= SINGULAR_RTOL * lambda_max_lower {
        return Err(Error::Singular(format!(
            "trace of inverse {total:e} exceeds conditioning bound"
        )));
    }
    Ok(total)
}
