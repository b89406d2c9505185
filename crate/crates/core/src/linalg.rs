//! Dense complex linear algebra used throughout the crate.
//!
//! Mostly a thin layer over `nalgebra`: a checked matrix newtype,
//! Hermitian spectra, SVD-derived quantities and the Moore-Penrose inverse,
//! with the tolerances the rest of the crate relies on.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative tolerance for treating a matrix as Hermitian.
pub const HERMITIAN_RTOL: f64 = 1e-9;

/// A dense complex matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Builds a matrix from entries in row-major order.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, &entries))
    }

    /// Builds a `rows x columns.len()` matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Result<Self> {
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::InvalidShape(format!(
                    "column {j} has length {}, expected {rows}",
                    c.len()
                )));
            }
        }
        let m = DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i]);
        Self::from_dmatrix(m)
    }

    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let z = m[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self(m))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Real diagonal matrix.
    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    /// Orthogonal projection of `C^dim` onto the span of the listed
    /// (zero-based) coordinate vectors.
    pub fn coordinate_projection(dim: usize, coords: impl IntoIterator<Item = usize>) -> Self {
        let mut diag = vec![0.0; dim];
        for c in coords {
            diag[c] = 1.0;
        }
        Self::diagonal(&diag)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        self.0.column(j).iter().copied().collect()
    }

    /// Entries in row-major order.
    pub fn row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols() != rhs.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                actual: rhs.rows(),
            });
        }
        Ok(Self(&self.0 * &rhs.0))
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs)?;
        Ok(Self(&self.0 + &rhs.0))
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs)?;
        Ok(Self(&self.0 - &rhs.0))
    }

    pub fn scale(&self, c: C64) -> Self {
        Self(&self.0 * c)
    }

    /// `M M*`.
    pub fn gram(&self) -> Self {
        Self(&self.0 * self.0.adjoint())
    }

    /// Largest absolute entry, `0` for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                actual: v.len(),
            });
        }
        let x = DVector::from_column_slice(v);
        Ok((&self.0 * x).iter().copied().collect())
    }

    fn check_same_shape(&self, rhs: &Self) -> Result<()> {
        if self.rows() != rhs.rows() || self.cols() != rhs.cols() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(())
    }
}

/// Extreme eigenvalues of a Hermitian matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralSummary {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Eigenvalues in ascending order with matching unit eigenvectors (columns).
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k).iter().copied().collect()
    }
}

/// `(H + H*) / 2` after checking that `H` is square and Hermitian within
/// [`HERMITIAN_RTOL`] of its largest entry.
pub fn symmetrized(h: &ComplexMatrix) -> Result<DMatrix<C64>> {
    if !h.is_square() {
        return Err(Error::NotSquare {
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    let m = h.as_dmatrix();
    let adj = m.adjoint();
    let asymmetry = (m - &adj).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tolerance = HERMITIAN_RTOL * (1.0 + h.max_abs());
    if asymmetry > tolerance {
        return Err(Error::NotHermitian {
            asymmetry,
            tolerance,
        });
    }
    Ok((m + adj) * C64::new(0.5, 0.0))
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come back ascending; equal eigenvalues keep the order in which
/// the eigensolver produced them, so the result is deterministic.
pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<HermitianEigen> {
    let sym = symmetrized(h)?;
    Ok(eigen_of_symmetric(sym))
}

pub(crate) fn eigen_of_symmetric(sym: DMatrix<C64>) -> HermitianEigen {
    let n = sym.nrows();
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    HermitianEigen { values, vectors }
}

pub(crate) fn eigenvalues_of_symmetric(sym: DMatrix<C64>) -> Vec<f64> {
    let mut v: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Smallest and largest eigenvalue of `(H + H*) / 2`.
pub fn spectral_bounds(h: &ComplexMatrix) -> Result<SpectralSummary> {
    let sym = symmetrized(h)?;
    if sym.nrows() == 0 {
        return Ok(SpectralSummary {
            lambda_min: 0.0,
            lambda_max: 0.0,
        });
    }
    let v = eigenvalues_of_symmetric(sym);
    Ok(SpectralSummary {
        lambda_min: v[0],
        lambda_max: v[v.len() - 1],
    })
}

/// Singular values in descending order.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.as_dmatrix().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical-rank cutoff `max(rows, cols) * eps * sigma_max`.
pub fn rank_threshold(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

pub fn numerical_rank(m: &ComplexMatrix) -> usize {
    let s = singular_values(m);
    let Some(&top) = s.first() else { return 0 };
    let tol = rank_threshold(m.rows(), m.cols(), top);
    s.iter().filter(|&&x| x > tol).count()
}

/// Largest singular value; `0` for the zero matrix.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Smallest singular value strictly above the rank threshold.
pub fn smallest_positive_singular(m: &ComplexMatrix) -> Result<f64> {
    let s = singular_values(m);
    let top = s.first().copied().unwrap_or(0.0);
    let tol = rank_threshold(m.rows(), m.cols(), top);
    s.into_iter()
        .rev()
        .find(|&x| x > tol)
        .ok_or(Error::ZeroOperator)
}

/// Moore-Penrose inverse via the SVD; singular values at or below the rank
/// threshold are treated as zero.
///
/// The singular vectors come from `faer`: nalgebra's SVD returns inaccurate
/// singular vectors for rank-deficient input.
pub fn pseudo_inverse(m: &ComplexMatrix) -> ComplexMatrix {
    let (rows, cols) = (m.rows(), m.cols());
    if rows == 0 || cols == 0 {
        return ComplexMatrix::zeros(cols, rows);
    }
    let a = faer::Mat::<C64>::from_fn(rows, cols, |i, j| m.0[(i, j)]);
    let Ok(svd) = a.thin_svd() else {
        return pseudo_inverse_by_eigen(m);
    };
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let top = (0..s.nrows()).map(|k| s[k].re).fold(0.0, f64::max);
    if top == 0.0 {
        return ComplexMatrix::zeros(cols, rows);
    }
    let tol = rank_threshold(rows, cols, top);
    let kept: Vec<usize> = (0..s.nrows()).filter(|&k| s[k].re > tol).collect();
    let pinv = DMatrix::<C64>::from_fn(cols, rows, |i, j| {
        kept.iter()
            .map(|&k| v[(i, k)] * u[(j, k)].conj() / s[k].re)
            .sum()
    });
    ComplexMatrix(pinv)
}

/// `(M* M)^+ M*` from a Hermitian eigendecomposition; used only if the SVD
/// does not converge.
fn pseudo_inverse_by_eigen(m: &ComplexMatrix) -> ComplexMatrix {
    let g = m.0.adjoint() * &m.0;
    let eig = eigen_of_symmetric(g);
    let top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let tol = rank_threshold(m.rows(), m.cols(), top.sqrt()).powi(2);
    let mut inv = DMatrix::<C64>::zeros(m.cols(), m.cols());
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam > tol {
            let v = eig.vectors.column(k);
            inv += (v * v.adjoint()) * C64::new(1.0 / lam, 0.0);
        }
    }
    ComplexMatrix(inv * m.0.adjoint())
}

/// `true` iff `lambda_min(M) > -tol`, decided by a Cholesky factorization of
/// `M + tol * I`. `M` must be Hermitian; only its lower triangle is read.
pub(crate) fn psd_within(m: &DMatrix<C64>, tol: f64) -> bool {
    let n = m.nrows();
    let mut l = m.clone();
    for i in 0..n {
        l[(i, i)] += C64::new(tol, 0.0);
    }
    // nalgebra's Cholesky accepts any complex pivot, so the real pivot is checked here.
    for j in 0..n {
        let mut d = l[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        // Also rejects NaN pivots.
        if d.is_nan() || d <= 0.0 {
            return false;
        }
        let d = d.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut z = l[(i, j)];
            for k in 0..j {
                z -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = z / d;
        }
    }
    true
}

/// Euclidean norm of a complex vector.
pub fn vector_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<a, b> = sum a_i conj(b_i)`, linear in the first argument.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}
