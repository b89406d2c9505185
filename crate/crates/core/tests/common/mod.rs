//! Random instance generators shared by the integration suites.
#![allow(dead_code)]

use kweave::{ComplexMatrix, Frame, KOperator, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gauss(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let entries = (0..rows * cols).map(|_| gauss(rng)).collect();
    ComplexMatrix::from_row_major(rows, cols, entries).unwrap()
}

/// Random matrix of rank at most `rank`.
pub fn random_low_rank(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    rank: usize,
) -> ComplexMatrix {
    random_matrix(rng, rows, rank)
        .matmul(&random_matrix(rng, rank, cols))
        .unwrap()
}

pub fn random_frame(rng: &mut ChaCha8Rng, dim: usize, count: usize) -> Frame {
    Frame::new(random_matrix(rng, dim, count)).unwrap()
}

/// Random nonzero `K` with rank drawn from `1..=dim`.
pub fn random_k(rng: &mut ChaCha8Rng, dim: usize) -> KOperator {
    let rank = rng.gen_range(1..=dim);
    KOperator::new(random_low_rank(rng, dim, dim, rank)).unwrap()
}

/// Zeroes a random subset of columns (never all of them).
pub fn with_random_zeros(rng: &mut ChaCha8Rng, frame: &Frame) -> Frame {
    let n = frame.count();
    let cols: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            if rng.gen_bool(0.2) && j > 0 {
                vec![C64::new(0.0, 0.0); frame.dim()]
            } else {
                frame.vector(j)
            }
        })
        .collect();
    Frame::from_columns(frame.dim(), &cols).unwrap()
}

/// Columns of a random unitary, first `count` of them.
pub fn random_orthonormal(rng: &mut ChaCha8Rng, dim: usize, count: usize) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    while basis.len() < count {
        let mut v: Vec<C64> = (0..dim).map(|_| gauss(rng)).collect();
        for b in &basis {
            let p: C64 = v.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= p * y;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    basis
}

/// Two-frame family in `C^dim` of `count` vectors, some columns zeroed.
pub fn random_family(rng: &mut ChaCha8Rng, dim: usize, count: usize) -> Vec<Frame> {
    (0..2)
        .map(|_| {
            let f = random_frame(rng, dim, count);
            with_random_zeros(rng, &f)
        })
        .collect()
}

pub fn hermitian_from(m: &ComplexMatrix) -> ComplexMatrix {
    m.add(&m.adjoint()).unwrap().scale(C64::new(0.5, 0.0))
}
