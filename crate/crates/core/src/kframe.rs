//! K-frames: optimal lower bounds by PSD-pencil bisection, membership
//! reports with witnesses, and Douglas range-inclusion checks.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{self, Frame};
use crate::linalg::{self, ComplexMatrix, C64};

/// Relative step used to certify that a returned lower bound is (nearly) optimal.
pub const CERTIFICATE_STEP: f64 = 1e-6;

/// Bisection stops when `(hi - lo) <= BISECTION_RTOL * hi`.
pub const BISECTION_RTOL: f64 = 1e-9;
pub const BISECTION_MAX_ITER: usize = 200;

/// `K` is flagged as near rank-deficient when `sigma_min_pos < NEAR_RANK_DEFICIENT * sigma_max`.
pub const NEAR_RANK_DEFICIENT: f64 = 1e-6;

/// Relative singular-value cutoff for the range-inclusion rank test.
pub const RANGE_RTOL: f64 = 1e-10;

/// Relative gap kept between `(1 + CERTIFICATE_STEP) * A` and the loose feasibility edge.
const WINDOW_MARGIN: f64 = 1e-7;

// Tolerance for the "exact" pencil supremum, relative to 1 + lambda_max(S).
const TIGHT_RTOL: f64 = 1e-13;

/// PSD tolerance `1e-9 * (1 + lambda_max(S))`.
pub fn psd_tolerance(lambda_max: f64) -> f64 {
    1e-9 * (1.0 + lambda_max)
}

/// A square operator `K` with `K K*`, its numerical rank and smallest
/// positive singular value cached at construction.
#[derive(Clone, Debug)]
pub struct KOperator {
    matrix: ComplexMatrix,
    gram: ComplexMatrix,
    rank: usize,
    sigma_min_pos: f64,
    sigma_max: f64,
}

impl KOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let s = linalg::singular_values(&matrix);
        let sigma_max = s.first().copied().unwrap_or(0.0);
        let tol = linalg::rank_threshold(matrix.rows(), matrix.cols(), sigma_max);
        let positive: Vec<f64> = s.into_iter().filter(|&x| x > tol).collect();
        let gram = matrix.gram();
        Ok(Self {
            rank: positive.len(),
            sigma_min_pos: positive.last().copied().unwrap_or(0.0),
            sigma_max,
            gram,
            matrix,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(ComplexMatrix::identity(dim)).expect("identity is square")
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `K K*`.
    pub fn gram(&self) -> &ComplexMatrix {
        &self.gram
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Smallest positive singular value; `1 / sigma_min_pos` is the norm of
    /// the inverse of `K*` restricted to `N(K*)^perp`.
    pub fn sigma_min_pos(&self) -> f64 {
        self.sigma_min_pos
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn is_zero(&self) -> bool {
        self.rank == 0
    }

    pub fn near_rank_deficient(&self) -> bool {
        self.rank > 0 && self.sigma_min_pos < NEAR_RANK_DEFICIENT * self.sigma_max
    }

    /// `U K`.
    pub fn compose_left(&self, u: &ComplexMatrix) -> Result<KOperator> {
        KOperator::new(u.matmul(&self.matrix)?)
    }
}

/// Outcome of a K-frame membership test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KFrameReport {
    pub is_kframe: bool,
    pub lower: f64,
    pub upper: f64,
    /// Unit vector `f` with `<S f, f> < threshold * ||K* f||^2`, present on failure.
    pub witness: Option<Vec<[f64; 2]>>,
}

/// `sup { A >= 0 : lambda_min(S - A G) > -tol }` by bisection on `[0, hi]`.
///
/// Feasibility is decided by a Cholesky factorization of `S - A G + tol I`.
fn pencil_sup(s: &DMatrix<C64>, g: &DMatrix<C64>, tol: f64, hi: f64) -> f64 {
    let feasible = |a: f64| linalg::psd_within(&(s - g * C64::new(a, 0.0)), tol);
    let (mut lo, mut hi) = (0.0_f64, hi);
    if feasible(hi) {
        return hi;
    }
    for _ in 0..BISECTION_MAX_ITER {
        if hi - lo <= BISECTION_RTOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Optimal lower bound `sup { A : S - A G >= 0 }` for Hermitian PSD `S`, `G`.
///
/// The returned value lies in the certificate window: `S - A G` is PSD up to
/// `psd_tolerance(lambda_max(S))` while `S - (1 + 1e-6) A G` is not. Within
/// that window the value closest to the exact pencil supremum is chosen.
/// Values indistinguishable from zero at the PSD tolerance are reported as `0`:
/// either `A * lambda_max(G)` is within the tolerance, or the supremum
/// collapses when the tolerance is tightened.
pub(crate) fn optimal_lower_bound(s: &DMatrix<C64>, g: &DMatrix<C64>, sigma_min_pos: f64) -> f64 {
    let s_max = linalg::eigenvalues_of_symmetric(s.clone())
        .last()
        .copied()
        .unwrap_or(0.0)
        .max(0.0);
    let g_max = linalg::eigenvalues_of_symmetric(g.clone())
        .last()
        .copied()
        .unwrap_or(0.0);
    let eps = psd_tolerance(s_max);
    let hi = s_max / (sigma_min_pos * sigma_min_pos) + 1.0;

    let loose = pencil_sup(s, g, eps, hi);
    if loose * g_max <= 2.0 * eps {
        return 0.0;
    }
    let tight = pencil_sup(s, g, TIGHT_RTOL * (1.0 + s_max), hi);
    if tight < 0.5 * loose {
        // Shrinking the tolerance moved the edge by the value itself: the
        // loose value is tolerance, not structure.
        return 0.0;
    }
    // (1 + CERTIFICATE_STEP) * floor must stay infeasible with some margin.
    let floor = loose * (1.0 + WINDOW_MARGIN) / (1.0 + CERTIFICATE_STEP);
    tight.clamp(floor, loose)
}

fn check_dims(frame: &Frame, k: &KOperator) -> Result<()> {
    if frame.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            actual: frame.dim(),
        });
    }
    if k.is_zero() {
        return Err(Error::ZeroK);
    }
    Ok(())
}

/// Optimal lower K-frame bound `sup { A >= 0 : S - A K K* >= 0 }`.
pub fn kframe_lower_bound(frame: &Frame, k: &KOperator) -> Result<f64> {
    check_dims(frame, k)?;
    let s = frames::frame_operator(frame);
    Ok(optimal_lower_bound(
        s.as_dmatrix(),
        k.gram().as_dmatrix(),
        k.sigma_min_pos(),
    ))
}

/// `lambda_min(S - A K K*)`, the quantity the bisection certificate is stated in.
pub fn pencil_min_eigenvalue(s: &ComplexMatrix, g: &ComplexMatrix, a: f64) -> Result<f64> {
    let m = s.sub(&g.scale(C64::new(a, 0.0)))?;
    Ok(linalg::spectral_bounds(&m)?.lambda_min)
}

/// Rotates `v` so that its first largest-magnitude entry is real and positive.
pub(crate) fn fix_phase(v: &mut [C64]) {
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() {
            best = i;
        }
    }
    let pivot = v[best];
    if pivot.norm() > 0.0 {
        let rot = pivot.conj() / pivot.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

/// Unit eigenvector for the most negative eigenvalue of `S - t K K*`.
pub fn kframe_witness(frame: &Frame, k: &KOperator, threshold: f64) -> Result<Vec<C64>> {
    check_dims(frame, k)?;
    let s = frames::frame_operator(frame);
    let m = s.sub(&k.gram().scale(C64::new(threshold, 0.0)))?;
    let eig = linalg::hermitian_eigen(&m)?;
    let mut v = eig.vector(0);
    let norm = linalg::vector_norm(&v);
    for z in v.iter_mut() {
        *z /= norm;
    }
    fix_phase(&mut v);
    Ok(v)
}

pub(crate) fn to_pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// Is `frame` a K-frame with lower bound at least `threshold`?
pub fn is_kframe(frame: &Frame, k: &KOperator, threshold: f64) -> Result<KFrameReport> {
    let lower = kframe_lower_bound(frame, k)?;
    let upper = frames::frame_bounds(frame).upper;
    let ok = lower >= threshold;
    let witness = if ok {
        None
    } else {
        Some(to_pairs(&kframe_witness(frame, k, threshold)?))
    };
    Ok(KFrameReport {
        is_kframe: ok,
        lower,
        upper,
        witness,
    })
}

/// Douglas factorization data for a pair `L1`, `L2` with a common codomain.
#[derive(Clone, Debug)]
pub struct DouglasReport {
    /// `R(L1) ⊆ R(L2)` by a rank test on `[L2 | L1]` against `L2`.
    pub range_included: bool,
    /// `inf { mu : L1 L1* <= mu L2 L2* }` by bisection; `+inf` when no finite `mu` is certified.
    pub lambda_sq: f64,
    /// Minimal-norm factor `L2^+ L1`.
    pub factor: ComplexMatrix,
    /// `||factor||^2`.
    pub factor_norm_sq: f64,
}

/// `inf { mu >= 0 : mu Q - P >= -tol }` for Hermitian PSD `P`, `Q`, searched
/// on `[0, hi]`. `None` when `hi` itself is infeasible.
fn pencil_inf(p: &DMatrix<C64>, q: &DMatrix<C64>, tol: f64, hi: f64) -> Option<f64> {
    let feasible = |mu: f64| linalg::psd_within(&(q * C64::new(mu, 0.0) - p), tol);
    if !feasible(hi) {
        return None;
    }
    let (mut lo, mut hi) = (0.0_f64, hi);
    if feasible(lo) {
        return Some(0.0);
    }
    for _ in 0..BISECTION_MAX_ITER {
        if hi - lo <= BISECTION_RTOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Smallest `mu` with `L1 L1* <= mu L2 L2*`, or `None` if there is none.
pub fn majorization_infimum(l1: &ComplexMatrix, l2: &ComplexMatrix) -> Result<Option<f64>> {
    if l1.rows() != l2.rows() {
        return Err(Error::DimensionMismatch {
            expected: l2.rows(),
            actual: l1.rows(),
        });
    }
    let p = l1.gram();
    let q = l2.gram();
    let p_max = linalg::spectral_bounds(&p)?.lambda_max.max(0.0);
    let Ok(s2) = linalg::smallest_positive_singular(l2) else {
        // L2 = 0: only L1 = 0 is dominated.
        let eps = psd_tolerance(p_max);
        return Ok((p_max <= eps).then_some(0.0));
    };
    let hi = 2.0 * p_max / (s2 * s2) + 1.0;
    let eps = psd_tolerance(p_max);
    if pencil_inf(p.as_dmatrix(), q.as_dmatrix(), eps, hi).is_none() {
        return Ok(None);
    }
    Ok(pencil_inf(
        p.as_dmatrix(),
        q.as_dmatrix(),
        TIGHT_RTOL * (1.0 + p_max),
        hi,
    )
    .or(Some(hi)))
}

fn rank_above(s: &[f64], cutoff: f64) -> usize {
    s.iter().filter(|&&x| x > cutoff).count()
}

/// Checks the equivalent conditions of Douglas' factorization theorem for
/// `L1`, `L2` with the same number of rows.
pub fn douglas_check(l1: &ComplexMatrix, l2: &ComplexMatrix) -> Result<DouglasReport> {
    if l1.rows() != l2.rows() {
        return Err(Error::DimensionMismatch {
            expected: l2.rows(),
            actual: l1.rows(),
        });
    }
    let rows = l1.rows();
    let mut cols: Vec<Vec<C64>> = (0..l2.cols()).map(|j| l2.column(j)).collect();
    cols.extend((0..l1.cols()).map(|j| l1.column(j)));
    let augmented = ComplexMatrix::from_columns(rows, &cols)?;

    let s_aug = linalg::singular_values(&augmented);
    let cutoff = RANGE_RTOL * s_aug.first().copied().unwrap_or(0.0);
    let s_l2 = linalg::singular_values(l2);
    let range_included = rank_above(&s_aug, cutoff) == rank_above(&s_l2, cutoff);

    let factor = linalg::pseudo_inverse(l2).matmul(l1)?;
    let norm = linalg::operator_norm(&factor);
    let lambda_sq = majorization_infimum(l1, l2)?.unwrap_or(f64::INFINITY);
    Ok(DouglasReport {
        range_included,
        lambda_sq,
        factor,
        factor_norm_sq: norm * norm,
    })
}
