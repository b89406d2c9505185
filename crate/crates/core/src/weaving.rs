//! Weavings of finitely many frames and K-woven certification.
//!
//! A partition assigns every index `j` to one of the `m` frames; the weaving
//! takes column `j` from the assigned frame. Exhaustive certification walks all
//! `m^n` partitions in lexicographic order (index 1 varies slowest) and reports
//! the universal bounds together with the first failing partition.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frames::{self, BoundsPair, Frame};
use crate::kframe::{self, KOperator};
use crate::linalg::{self, ComplexMatrix, C64};

/// Default limit on the number of weavings visited in exhaustive mode.
pub const DEFAULT_PARTITION_CAP: u64 = 1 << 20;

/// Default threshold separating a failing weaving from roundoff: `1e-8 * (1 + B)`.
pub fn default_woven_threshold(universal_upper: f64) -> f64 {
    1e-8 * (1.0 + universal_upper)
}

/// Assignment of each index to one of `m` frames (stored zero-based).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    assignment: Vec<usize>,
    frames: usize,
}

impl Partition {
    /// From zero-based frame indices.
    pub fn new(assignment: Vec<usize>, frames: usize) -> Result<Self> {
        if frames == 0 {
            return Err(Error::ShapeMismatch(
                "a partition needs at least one frame".into(),
            ));
        }
        if let Some(bad) = assignment.iter().find(|&&a| a >= frames) {
            return Err(Error::ShapeMismatch(format!(
                "frame index {bad} out of range for {frames} frames"
            )));
        }
        Ok(Self { assignment, frames })
    }

    /// From one-based frame labels, as printed in reports.
    pub fn from_labels(labels: &[usize], frames: usize) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::ShapeMismatch("partition labels start at 1".into()));
        }
        Self::new(labels.iter().map(|l| l - 1).collect(), frames)
    }

    /// Every index assigned to frame `i` (zero-based).
    pub fn pure(n: usize, frames: usize, i: usize) -> Self {
        Self {
            assignment: vec![i; n],
            frames,
        }
    }

    /// The `index`-th partition in lexicographic order.
    pub fn from_index(mut index: u64, n: usize, frames: usize) -> Self {
        let m = frames as u64;
        let mut assignment = vec![0; n];
        for slot in assignment.iter_mut().rev() {
            *slot = (index % m) as usize;
            index /= m;
        }
        Self { assignment, frames }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    /// Zero-based frame index of each position.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// One-based frame labels.
    pub fn labels(&self) -> Vec<usize> {
        self.assignment.iter().map(|a| a + 1).collect()
    }

    /// One-based indices `j` assigned to frame `i` (zero-based).
    pub fn block(&self, i: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == i)
            .map(|(j, _)| j + 1)
            .collect()
    }

    /// Digit string of zero-based frame indices, e.g. `0100` for `m = 2`.
    pub fn digits(&self) -> String {
        self.assignment
            .iter()
            .map(|&a| std::char::from_digit(a as u32, 36).unwrap_or('?'))
            .collect()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<String> = (0..self.frames)
            .map(|i| {
                let b: Vec<String> = self.block(i).iter().map(|j| j.to_string()).collect();
                format!("{{{}}}", b.join(","))
            })
            .collect();
        write!(f, "{}", blocks.join(" | "))
    }
}

impl Serialize for Partition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.labels().serialize(s)
    }
}

/// Checks that all frames share dimension and count; returns `(dim, count)`.
pub fn family_shape(frames: &[Frame]) -> Result<(usize, usize)> {
    let first = frames
        .first()
        .ok_or_else(|| Error::ShapeMismatch("empty family".into()))?;
    for (i, f) in frames.iter().enumerate().skip(1) {
        if f.dim() != first.dim() || f.count() != first.count() {
            return Err(Error::ShapeMismatch(format!(
                "frame {} is {}x{}, frame 1 is {}x{}",
                i + 1,
                f.dim(),
                f.count(),
                first.dim(),
                first.count()
            )));
        }
    }
    Ok((first.dim(), first.count()))
}

fn check_partition(frames: &[Frame], p: &Partition) -> Result<(usize, usize)> {
    let (dim, n) = family_shape(frames)?;
    if p.len() != n || p.frames() != frames.len() {
        return Err(Error::ShapeMismatch(format!(
            "partition of {} indices over {} frames, family has {} frames of {} vectors",
            p.len(),
            p.frames(),
            frames.len(),
            n
        )));
    }
    Ok((dim, n))
}

/// The weaving `∪_i {phi_ij}_{j in sigma_i}` as a frame; its synthesis matrix is `M_sigma`.
pub fn weaving_family(frames: &[Frame], p: &Partition) -> Result<Frame> {
    let (dim, n) = check_partition(frames, p)?;
    let cols: Vec<Vec<C64>> = (0..n).map(|j| frames[p.assignment[j]].vector(j)).collect();
    Frame::from_columns(dim, &cols)
}

/// `(optimal lower K-frame bound, upper frame bound)` of one weaving.
pub fn weaving_bounds(frames: &[Frame], p: &Partition, k: &KOperator) -> Result<BoundsPair> {
    let w = weaving_family(frames, p)?;
    let lower = kframe::kframe_lower_bound(&w, k)?;
    let upper = frames::frame_bounds(&w).upper;
    Ok(BoundsPair { lower, upper })
}

/// `lambda_min(M_sigma M_sigma* - A K K*)`: nonnegative (up to tolerance) iff
/// `A` is a lower K-frame bound of the weaving.
pub fn operator_criterion_margin(
    frames: &[Frame],
    p: &Partition,
    k: &KOperator,
    a: f64,
) -> Result<f64> {
    let m_sigma = weaving_family(frames, p)?;
    let s = m_sigma.vectors().gram();
    kframe::pencil_min_eigenvalue(&s, k.gram(), a)
}

/// `sum_i B_i`, a universal upper bound for every weaving.
pub fn universal_upper_bound(frames: &[Frame]) -> Result<f64> {
    family_shape(frames)?;
    Ok(frames.iter().map(|f| frames::frame_bounds(f).upper).sum())
}

/// How partitions are visited.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    Exhaustive,
    /// `budget` uniform random partitions plus the `m` pure ones.
    Sampled {
        budget: usize,
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug)]
pub struct CertifyOptions {
    pub mode: SearchMode,
    pub partition_cap: u64,
    /// Overrides [`default_woven_threshold`].
    pub woven_threshold: Option<f64>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            mode: SearchMode::Exhaustive,
            partition_cap: DEFAULT_PARTITION_CAP,
            woven_threshold: None,
        }
    }
}

impl CertifyOptions {
    pub fn sampled(budget: usize, seed: u64) -> Self {
        Self {
            mode: SearchMode::Sampled { budget, seed },
            ..Self::default()
        }
    }
}

/// Result of a weaving certification.
#[derive(Clone, Debug, Serialize)]
pub struct WeavingReport {
    /// Exhaustive: every weaving has lower bound above the threshold.
    /// Sampled: no counterexample found among the visited partitions.
    pub woven: bool,
    /// Every visited weaving passes the K-frame test at the threshold.
    pub weakly_woven: bool,
    pub universal_lower: f64,
    pub universal_upper: f64,
    /// `sum_i B_i` over the individual frames.
    pub sum_upper_bound: f64,
    pub woven_threshold: f64,
    pub worst_partition: Partition,
    pub failing_partition: Option<Partition>,
    /// Unit vector on which the failing weaving violates the lower K-frame inequality.
    pub witness: Option<Vec<[f64; 2]>>,
    pub partitions_checked: u64,
    pub exhaustive: bool,
    pub seed: Option<u64>,
}

/// Precomputed rank-one pieces `phi_ij phi_ij*` for fast weaving evaluation.
struct Evaluator<'a> {
    pieces: Vec<Vec<DMatrix<C64>>>,
    k: &'a KOperator,
    dim: usize,
}

impl<'a> Evaluator<'a> {
    fn new(frames: &[Frame], k: &'a KOperator) -> Result<Self> {
        let (dim, n) = family_shape(frames)?;
        if dim != k.dim() {
            return Err(Error::DimensionMismatch {
                expected: k.dim(),
                actual: dim,
            });
        }
        if k.is_zero() {
            return Err(Error::ZeroK);
        }
        let pieces = frames
            .iter()
            .map(|f| {
                (0..n)
                    .map(|j| {
                        let c = f.vectors().as_dmatrix().column(j).into_owned();
                        &c * c.adjoint()
                    })
                    .collect()
            })
            .collect();
        Ok(Self { pieces, k, dim })
    }

    fn bounds(&self, p: &Partition) -> BoundsPair {
        let mut s = DMatrix::<C64>::zeros(self.dim, self.dim);
        for (j, &i) in p.assignment.iter().enumerate() {
            s += &self.pieces[i][j];
        }
        let upper = linalg::eigenvalues_of_symmetric(s.clone())
            .last()
            .copied()
            .unwrap_or(0.0)
            .max(0.0);
        let lower =
            kframe::optimal_lower_bound(&s, self.k.gram().as_dmatrix(), self.k.sigma_min_pos());
        BoundsPair { lower, upper }
    }
}

/// One row of the per-partition bound table.
#[derive(Clone, Debug, Serialize)]
pub struct PartitionRow {
    pub partition: Partition,
    pub bounds: BoundsPair,
}

fn exhaustive_count(m: usize, n: usize, cap: u64) -> Result<u64> {
    let mut total: u128 = 1;
    for _ in 0..n {
        total = total.saturating_mul(m as u128);
    }
    if total > cap as u128 {
        return Err(Error::CapExceeded { needed: total, cap });
    }
    Ok(total as u64)
}

fn sampled_partitions(m: usize, n: usize, budget: usize, seed: u64) -> Vec<Partition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Partition> = (0..m).map(|i| Partition::pure(n, m, i)).collect();
    out.extend((0..budget).map(|_| Partition {
        assignment: (0..n).map(|_| rng.gen_range(0..m)).collect(),
        frames: m,
    }));
    out
}

/// Bounds of every visited weaving, in visiting order.
pub fn partition_table(
    frames: &[Frame],
    k: &KOperator,
    options: &CertifyOptions,
) -> Result<Vec<PartitionRow>> {
    let (_, n) = family_shape(frames)?;
    let m = frames.len();
    let eval = Evaluator::new(frames, k)?;
    let partitions: Vec<Partition> = match options.mode {
        SearchMode::Exhaustive => {
            let total = exhaustive_count(m, n, options.partition_cap)?;
            (0..total).map(|i| Partition::from_index(i, n, m)).collect()
        }
        SearchMode::Sampled { budget, seed } => sampled_partitions(m, n, budget, seed),
    };
    Ok(partitions
        .into_par_iter()
        .map(|p| {
            let bounds = eval.bounds(&p);
            PartitionRow {
                partition: p,
                bounds,
            }
        })
        .collect())
}

/// Certifies (exhaustive) or searches for counterexamples to (sampled) the
/// K-woven property of `frames`.
pub fn certify_woven(
    frames: &[Frame],
    k: &KOperator,
    options: &CertifyOptions,
) -> Result<WeavingReport> {
    let (_, n) = family_shape(frames)?;
    let m = frames.len();
    let eval = Evaluator::new(frames, k)?;

    let (partition_at, bounds): (Box<dyn Fn(usize) -> Partition + Sync>, Vec<BoundsPair>) =
        match options.mode {
            SearchMode::Exhaustive => {
                let total = exhaustive_count(m, n, options.partition_cap)?;
                let bounds = (0..total)
                    .into_par_iter()
                    .map(|i| eval.bounds(&Partition::from_index(i, n, m)))
                    .collect();
                (
                    Box::new(move |i| Partition::from_index(i as u64, n, m)),
                    bounds,
                )
            }
            SearchMode::Sampled { budget, seed } => {
                let parts = sampled_partitions(m, n, budget, seed);
                let bounds = parts.par_iter().map(|p| eval.bounds(p)).collect();
                (Box::new(move |i| parts[i].clone()), bounds)
            }
        };

    let universal_upper = bounds.iter().map(|b| b.upper).fold(0.0, f64::max);
    let threshold = options
        .woven_threshold
        .unwrap_or_else(|| default_woven_threshold(universal_upper));

    // Exhaustive rows are already in lexicographic order; sampled rows are not,
    // so ties and "first failing" compare partitions explicitly.
    let mut worst = 0usize;
    let mut failing: Option<usize> = None;
    let mut worst_p = partition_at(0);
    let mut failing_p: Option<Partition> = None;
    for (i, b) in bounds.iter().enumerate() {
        let needs_partition = b.lower <= bounds[worst].lower || b.lower <= threshold;
        if !needs_partition {
            continue;
        }
        let p = partition_at(i);
        if b.lower < bounds[worst].lower || (b.lower == bounds[worst].lower && p < worst_p) {
            worst = i;
            worst_p = p.clone();
        }
        if b.lower <= threshold && failing_p.as_ref().is_none_or(|f| p < *f) {
            failing = Some(i);
            failing_p = Some(p);
        }
    }
    let universal_lower = bounds[worst].lower;
    let woven = universal_lower > threshold;
    let weakly_woven = bounds.iter().all(|b| b.lower >= threshold);

    let witness = match (&failing_p, failing) {
        (Some(p), Some(_)) => {
            let w = weaving_family(frames, p)?;
            Some(kframe::to_pairs(&kframe::kframe_witness(&w, k, threshold)?))
        }
        _ => None,
    };

    Ok(WeavingReport {
        woven,
        weakly_woven,
        universal_lower,
        universal_upper,
        sum_upper_bound: universal_upper_bound(frames)?,
        woven_threshold: threshold,
        worst_partition: worst_p,
        failing_partition: failing_p,
        witness,
        partitions_checked: bounds.len() as u64,
        exhaustive: matches!(options.mode, SearchMode::Exhaustive),
        seed: match options.mode {
            SearchMode::Sampled { seed, .. } => Some(seed),
            SearchMode::Exhaustive => None,
        },
    })
}

/// Certifies the images `{U phi_ij}` against the operator `U K`.
pub fn transform_weaving(
    frames: &[Frame],
    k: &KOperator,
    u: &ComplexMatrix,
    options: &CertifyOptions,
) -> Result<WeavingReport> {
    let (dim, _) = family_shape(frames)?;
    if !u.is_square() {
        return Err(Error::NotSquare {
            rows: u.rows(),
            cols: u.cols(),
        });
    }
    if u.rows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: u.rows(),
        });
    }
    let images = frames
        .iter()
        .map(|f| f.image(u))
        .collect::<Result<Vec<_>>>()?;
    let uk = k.compose_left(u)?;
    if uk.is_zero() {
        return Err(Error::ZeroK);
    }
    certify_woven(&images, &uk, options)
}
