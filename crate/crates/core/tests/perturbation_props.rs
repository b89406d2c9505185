mod common;

use common::*;
use kweave::perturbation::{
    check_orthogonal_alpha, perturbation_certify, perturbation_condition, synthesis_gap,
    PerturbationOptions, PerturbationParams,
};
use kweave::weaving::CertifyOptions;
use kweave::{Frame, KOperator, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Orthogonal `Phi1` spanning `C^dim` with column norms in `[1, 2]`.
fn orthogonal_frame(rng: &mut ChaCha8Rng, dim: usize) -> Frame {
    let cols: Vec<Vec<C64>> = random_orthonormal(rng, dim, dim)
        .into_iter()
        .map(|v| {
            let s = rng.gen_range(1.0..2.0);
            v.into_iter().map(|z| z * s).collect()
        })
        .collect();
    Frame::from_columns(dim, &cols).unwrap()
}

fn bumped(rng: &mut ChaCha8Rng, f: &Frame, size: f64) -> Frame {
    let e = random_matrix(rng, f.dim(), f.count());
    let e = e.scale(C64::new(size / kweave::linalg::operator_norm(&e), 0.0));
    Frame::new(f.vectors().add(&e).unwrap()).unwrap()
}

/// A pair where the strict inequality holds with `mu = nu = 0`, `lambda` the synthesis gap.
fn sufficient_instance(seed: u64) -> (Frame, Frame, KOperator, PerturbationParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let dim = rng.gen_range(2..=6);
        let f1 = orthogonal_frame(&mut rng, dim);
        let k = random_k(&mut rng, dim);
        let alpha = check_orthogonal_alpha(&f1).alpha_max * rng.gen_range(0.5..1.0);
        let mut size = rng.gen_range(0.05..1.0);
        for _ in 0..30 {
            let f2 = bumped(&mut rng, &f1, size);
            let gap = synthesis_gap(&f1, &f2).unwrap();
            let params = PerturbationParams::new(gap, 0.0, 0.0, alpha).unwrap();
            let r = perturbation_condition(&f1, &f2, &k, &params, &PerturbationOptions::default())
                .unwrap();
            if r.condition_holds {
                return (f1, f2, k, params);
            }
            size *= 0.5;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn sufficiency_at_finite_scale(seed in any::<u64>()) {
        let (f1, f2, k, params) = sufficient_instance(seed);
        let c = perturbation_certify(&f1, &f2, &k, &params, &PerturbationOptions::default(), &CertifyOptions::default()).unwrap();
        prop_assert!(c.report.applies());
        prop_assert!(c.measured.woven);
        prop_assert!(c.measured.universal_lower >= c.report.predicted_lower.unwrap() - 1e-6,
            "measured {} predicted {:?}", c.measured.universal_lower, c.report.predicted_lower);
        prop_assert!(c.measured.universal_upper <= c.report.b1 + c.report.b2 + 1e-6);
        prop_assert!(c.consistent);
    }

    #[test]
    fn gap_triangle_inequality(seed in any::<u64>(), dim in 1usize..=6, count in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_frame(&mut rng, dim, count);
        let b = random_frame(&mut rng, dim, count);
        let c = random_frame(&mut rng, dim, count);
        let ab = synthesis_gap(&a, &b).unwrap();
        let bc = synthesis_gap(&b, &c).unwrap();
        let ac = synthesis_gap(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }
}

#[test]
fn predicted_lower_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..3 {
        let f1 = orthogonal_frame(&mut rng, 3);
        let f2 = bumped(&mut rng, &f1, 0.01);
        let k = random_k(&mut rng, 3);
        let alpha = check_orthogonal_alpha(&f1).alpha_max;
        let predict = |l: f64, m: f64, n: f64| {
            let p = PerturbationParams::new(l, m, n, alpha).unwrap();
            perturbation_condition(&f1, &f2, &k, &p, &PerturbationOptions::default())
                .unwrap()
                .predicted_lower
                .unwrap_or(0.0)
        };
        let grid = [0.0, 0.002, 0.01, 0.03];
        for &l in &grid {
            for &m in &grid {
                for w in grid.windows(2) {
                    assert!(predict(l, m, w[1]) <= predict(l, m, w[0]));
                    assert!(predict(l, w[1], m) <= predict(l, w[0], m));
                    assert!(predict(w[1], l, m) <= predict(w[0], l, m));
                }
            }
        }
    }
}

#[test]
fn zero_column_in_first_frame_is_rejected() {
    let f1 = Frame::from_basis_pattern(2, &[Some(0), None, Some(1)]).unwrap();
    let k = KOperator::identity(2);
    let p = PerturbationParams::new(0.0, 0.0, 0.0, 0.5).unwrap();
    assert!(perturbation_condition(&f1, &f1, &k, &p, &PerturbationOptions::default()).is_err());
}
