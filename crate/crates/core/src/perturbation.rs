//! Perturbation criterion for a pair of K-frames `Phi1`, `Phi2`.
//!
//! With `Phi1` an orthogonal set with `||phi_1j||^2 >= alpha > 0`, lower bound
//! `A1` and upper bounds `B1`, `B2`, and the synthesis difference bounded by
//!
//! ```text
//! ||sum a_j (phi_1j - phi_2j)|| <= lambda ||a|| + mu ||sum a_j phi_1j|| + nu ||sum a_j phi_2j||,
//! ```
//!
//! the two families are K-woven with universal bounds
//! `[sqrt(alpha A1) - c]^2 / (B1 + B2)` and `B1 + B2` whenever
//! `c = (sqrt B1 + sqrt B2)(lambda + mu sqrt B1 + nu sqrt B2) / sigma_min_pos(K)`
//! is strictly below `sqrt(alpha A1)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Hypothesis, Result};
use crate::frames::{self, Frame};
use crate::kframe::{self, KOperator};
use crate::linalg::{self, C64};
use crate::weaving::{self, CertifyOptions, WeavingReport};

/// Inner products below this fraction of the largest squared column norm count as zero.
pub const ORTHOGONALITY_RTOL: f64 = 1e-9;

/// Number of random coefficient sequences used when the gap condition has no closed form.
pub const GAP_SAMPLES: usize = 10_000;

/// Relative margin required by the strict inequality.
const STRICT_MARGIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrthogonalityCheck {
    pub orthogonal: bool,
    /// Smallest squared norm over the nonzero columns.
    pub alpha_max: f64,
}

/// Is the frame an orthogonal set of nonzero vectors, and how large can `alpha` be?
pub fn check_orthogonal_alpha(frame: &Frame) -> OrthogonalityCheck {
    let n = frame.count();
    let cols: Vec<Vec<C64>> = (0..n).map(|j| frame.vector(j)).collect();
    let norms: Vec<f64> = cols
        .iter()
        .map(|c| linalg::vector_norm(c).powi(2))
        .collect();
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let tol = ORTHOGONALITY_RTOL * max_norm;

    let has_zero = max_norm == 0.0 || norms.iter().any(|&s| s <= tol);
    let mut max_inner: f64 = 0.0;
    for j in 0..n {
        for k in (j + 1)..n {
            max_inner = max_inner.max(linalg::inner(&cols[j], &cols[k]).norm());
        }
    }
    let alpha_max = norms
        .iter()
        .copied()
        .filter(|&s| s > tol)
        .fold(f64::INFINITY, f64::min);
    OrthogonalityCheck {
        orthogonal: !has_zero && max_inner <= tol,
        alpha_max: if alpha_max.is_finite() {
            alpha_max
        } else {
            0.0
        },
    }
}

/// `||T1 - T2||`: the smallest `lambda` satisfying the gap condition with `mu = nu = 0`.
pub fn synthesis_gap(f1: &Frame, f2: &Frame) -> Result<f64> {
    if f1.dim() != f2.dim() || f1.count() != f2.count() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            f1.dim(),
            f1.count(),
            f2.dim(),
            f2.count()
        )));
    }
    Ok(linalg::operator_norm(&f1.vectors().sub(f2.vectors())?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerturbationParams {
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    pub alpha: f64,
}

impl PerturbationParams {
    pub fn new(lambda: f64, mu: f64, nu: f64, alpha: f64) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("mu", mu), ("nu", nu)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParams(format!(
                "alpha must be finite and > 0, got {alpha}"
            )));
        }
        Ok(Self {
            lambda,
            mu,
            nu,
            alpha,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GapVerification {
    /// `synthesis_gap <= lambda`, decided exactly (`mu = nu = 0`).
    Exact,
    /// Checked on `samples` random unit coefficient sequences.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PerturbationOptions {
    /// Seed for the sampled gap check.
    pub seed: u64,
    /// Replaces the computed optimal lower bound of `Phi1`; must not exceed it.
    pub a1_override: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbationReport {
    pub hypotheses_ok: bool,
    /// `lhs < rhs` with a relative margin of `1e-12`.
    pub condition_holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// The synthesis-difference bound held on every check performed.
    pub gap_condition_holds: bool,
    pub gap_verification: GapVerification,
    pub gap_violations: usize,
    pub synthesis_gap: f64,
    pub predicted_lower: Option<f64>,
    pub predicted_upper: f64,
    pub a1: f64,
    pub b1: f64,
    pub b2: f64,
    pub sigma_min_pos: f64,
    pub params: PerturbationParams,
}

impl PerturbationReport {
    /// Both hypotheses hold, so the conclusion must hold.
    pub fn applies(&self) -> bool {
        self.condition_holds && self.gap_condition_holds
    }
}

fn check_gap(
    f1: &Frame,
    f2: &Frame,
    params: &PerturbationParams,
    gap: f64,
    seed: u64,
) -> Result<(GapVerification, usize)> {
    if params.mu == 0.0 && params.nu == 0.0 {
        let ok = gap <= params.lambda * (1.0 + STRICT_MARGIN);
        return Ok((GapVerification::Exact, usize::from(!ok)));
    }
    let diff = f1.vectors().sub(f2.vectors())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = f1.count();
    let mut violations = 0;
    for _ in 0..GAP_SAMPLES {
        let mut a: Vec<C64> = (0..n)
            .map(|_| {
                C64::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                )
            })
            .collect();
        let norm = linalg::vector_norm(&a);
        a.iter_mut().for_each(|z| *z /= norm);
        let left = linalg::vector_norm(&diff.apply(&a)?);
        let t1 = linalg::vector_norm(&frames::synthesis(f1, &a)?);
        let t2 = linalg::vector_norm(&frames::synthesis(f2, &a)?);
        let right = params.lambda + params.mu * t1 + params.nu * t2;
        if left > right * (1.0 + STRICT_MARGIN) + 1e-15 {
            violations += 1;
        }
    }
    Ok((
        GapVerification::Sampled {
            samples: GAP_SAMPLES,
            seed,
        },
        violations,
    ))
}

/// Evaluates the hypotheses and the strict inequality, and predicts the universal bounds.
pub fn perturbation_condition(
    f1: &Frame,
    f2: &Frame,
    k: &KOperator,
    params: &PerturbationParams,
    options: &PerturbationOptions,
) -> Result<PerturbationReport> {
    let gap = synthesis_gap(f1, f2)?;
    let ortho = check_orthogonal_alpha(f1);
    if !ortho.orthogonal {
        return Err(Error::HypothesesViolated(Hypothesis::Orthogonality));
    }
    if params.alpha > ortho.alpha_max {
        return Err(Error::HypothesesViolated(Hypothesis::Alpha));
    }
    let a1_opt = kframe::kframe_lower_bound(f1, k)?;
    let a1 = match options.a1_override {
        Some(a) if a > a1_opt * (1.0 + 1e-9) => {
            return Err(Error::InvalidParams(format!(
                "A1 override {a} exceeds the optimal lower bound {a1_opt}"
            )))
        }
        Some(a) if a <= 0.0 => return Err(Error::HypothesesViolated(Hypothesis::LowerBound)),
        Some(a) => a,
        None => a1_opt,
    };
    if a1 <= 0.0 {
        return Err(Error::HypothesesViolated(Hypothesis::LowerBound));
    }

    let b1 = frames::frame_bounds(f1).upper;
    let b2 = frames::frame_bounds(f2).upper;
    let (sb1, sb2) = (b1.sqrt(), b2.sqrt());
    let sigma = k.sigma_min_pos();
    let lhs = (sb1 + sb2) * (params.lambda + params.mu * sb1 + params.nu * sb2) / sigma;
    let rhs = (params.alpha * a1).sqrt();
    let condition_holds = lhs < rhs - STRICT_MARGIN * rhs;
    let predicted_lower = condition_holds.then(|| (rhs - lhs).powi(2) / (b1 + b2));

    let (gap_verification, gap_violations) = check_gap(f1, f2, params, gap, options.seed)?;

    Ok(PerturbationReport {
        hypotheses_ok: true,
        condition_holds,
        lhs,
        rhs,
        gap_condition_holds: gap_violations == 0,
        gap_verification,
        gap_violations,
        synthesis_gap: gap,
        predicted_lower,
        predicted_upper: b1 + b2,
        a1,
        b1,
        b2,
        sigma_min_pos: sigma,
        params: *params,
    })
}

/// Prediction next to the exhaustively measured weaving bounds.
#[derive(Clone, Debug, Serialize)]
pub struct PerturbationCertificate {
    pub report: PerturbationReport,
    pub measured: WeavingReport,
    /// The prediction is borne out, or it made no claim.
    pub consistent: bool,
}

/// Slack allowed between predicted and measured bounds.
pub const CONSISTENCY_TOL: f64 = 1e-6;

/// Runs [`perturbation_condition`] and checks its prediction against an
/// exhaustive certification of the pair.
pub fn perturbation_certify(
    f1: &Frame,
    f2: &Frame,
    k: &KOperator,
    params: &PerturbationParams,
    options: &PerturbationOptions,
    certify: &CertifyOptions,
) -> Result<PerturbationCertificate> {
    let report = perturbation_condition(f1, f2, k, params, options)?;
    let measured = weaving::certify_woven(&[f1.clone(), f2.clone()], k, certify)?;
    let consistent = !report.applies()
        || (measured.woven
            && measured.universal_lower >= report.predicted_lower.unwrap_or(0.0) - CONSISTENCY_TOL
            && measured.universal_upper <= report.predicted_upper + CONSISTENCY_TOL);
    Ok(PerturbationCertificate {
        report,
        measured,
        consistent,
    })
}
