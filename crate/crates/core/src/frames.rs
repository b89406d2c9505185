//! Finite frames stored as `d x n` matrices whose columns are the frame vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, C64};

/// Below this fraction of the upper bound a lower bound counts as zero
/// ("Bessel sequence but not a frame").
pub const FRAME_RTOL: f64 = 1e-10;

/// Lower and upper frame (or K-frame) bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsPair {
    pub lower: f64,
    pub upper: f64,
}

/// A finite sequence of vectors in `C^dim`, in column order.
///
/// Zero columns are allowed and contribute nothing to the frame operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    vectors: ComplexMatrix,
}

impl Frame {
    pub fn new(vectors: ComplexMatrix) -> Result<Self> {
        if vectors.rows() == 0 || vectors.cols() == 0 {
            return Err(Error::InvalidShape(format!(
                "a frame needs dim >= 1 and count >= 1, got {}x{}",
                vectors.rows(),
                vectors.cols()
            )));
        }
        Ok(Self { vectors })
    }

    pub fn from_columns(dim: usize, columns: &[Vec<C64>]) -> Result<Self> {
        Self::new(ComplexMatrix::from_columns(dim, columns)?)
    }

    /// Frame made of real coordinate vectors: `Some(k)` is `e_{k+1}`, `None` is `0`.
    pub fn from_basis_pattern(dim: usize, pattern: &[Option<usize>]) -> Result<Self> {
        let cols: Vec<Vec<C64>> = pattern
            .iter()
            .map(|p| {
                let mut v = vec![C64::new(0.0, 0.0); dim];
                if let Some(k) = *p {
                    v[k] = C64::new(1.0, 0.0);
                }
                v
            })
            .collect();
        Self::from_columns(dim, &cols)
    }

    pub fn dim(&self) -> usize {
        self.vectors.rows()
    }

    pub fn count(&self) -> usize {
        self.vectors.cols()
    }

    /// The synthesis matrix `T`, whose columns are the frame vectors.
    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    pub fn vector(&self, j: usize) -> Vec<C64> {
        self.vectors.column(j)
    }

    /// Frame vectors of `self` followed by those of `other`.
    pub fn concat(&self, other: &Frame) -> Result<Frame> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        let mut cols: Vec<Vec<C64>> = (0..self.count()).map(|j| self.vector(j)).collect();
        cols.extend((0..other.count()).map(|j| other.vector(j)));
        Frame::from_columns(self.dim(), &cols)
    }

    pub fn scaled(&self, c: C64) -> Frame {
        Frame {
            vectors: self.vectors.scale(c),
        }
    }

    /// Image `{U f_k}` of the frame under a square operator `U`.
    pub fn image(&self, u: &ComplexMatrix) -> Result<Frame> {
        if !u.is_square() {
            return Err(Error::NotSquare {
                rows: u.rows(),
                cols: u.cols(),
            });
        }
        Frame::new(u.matmul(&self.vectors)?)
    }
}

/// `S = T T* = sum_k f_k f_k*`.
pub fn frame_operator(frame: &Frame) -> ComplexMatrix {
    frame.vectors.gram()
}

/// `(lambda_min(S), lambda_max(S))`, with the lower bound clamped at zero.
pub fn frame_bounds(frame: &Frame) -> BoundsPair {
    let s = frame_operator(frame);
    let spec = linalg::spectral_bounds(&s).expect("frame operator is Hermitian");
    BoundsPair {
        lower: spec.lambda_min.max(0.0),
        upper: spec.lambda_max.max(0.0),
    }
}

/// Whether the sequence satisfies a lower frame inequality, as opposed to
/// being merely Bessel.
pub fn is_frame(frame: &Frame) -> bool {
    let b = frame_bounds(frame);
    b.upper > 0.0 && b.lower >= FRAME_RTOL * b.upper
}

/// `T* f = (<f, f_k>)_k`.
pub fn analysis_coefficients(frame: &Frame, f: &[C64]) -> Result<Vec<C64>> {
    if f.len() != frame.dim() {
        return Err(Error::DimensionMismatch {
            expected: frame.dim(),
            actual: f.len(),
        });
    }
    Ok((0..frame.count())
        .map(|k| linalg::inner(f, frame.vectors.as_dmatrix().column(k).as_slice()))
        .collect())
}

/// `T c = sum_k c_k f_k`.
pub fn synthesis(frame: &Frame, coefficients: &[C64]) -> Result<Vec<C64>> {
    if coefficients.len() != frame.count() {
        return Err(Error::DimensionMismatch {
            expected: frame.count(),
            actual: coefficients.len(),
        });
    }
    frame.vectors.apply(coefficients)
}
