//! Truncations of the standard weaving examples in `C^dim`.
//!
//! Each sequence is cut at the smallest index `n` after which no further
//! occurrence of `e_dim` appears in either frame.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::frames::Frame;
use crate::kframe::KOperator;
use crate::linalg::ComplexMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleName {
    /// `{0, e2, 0, e3, 0, ...}` and `{0, e2, e2, e3, e3, ...}`: woven.
    ExampleA,
    /// `{e1, e2, 0, e3, e4, ...}` and `{e1, 0, e2, e3, e4, ...}`: not woven.
    ExampleB,
    /// `{e1, 0, e2, 0, e3, 0, ...}` and `{0, e1, 0, e2, e3, e3, e4, e4, ...}`:
    /// not woven, but woven after projecting onto `span{e3, e4, ...}`.
    ExamplePr2,
}

impl ExampleName {
    pub const ALL: [ExampleName; 3] = [Self::ExampleA, Self::ExampleB, Self::ExamplePr2];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ExampleA => "example_a",
            Self::ExampleB => "example_b",
            Self::ExamplePr2 => "example_pr2",
        }
    }
}

impl fmt::Display for ExampleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExampleName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| {
                format!("unknown example {s:?} (expected example_a, example_b or example_pr2)")
            })
    }
}

#[derive(Clone, Debug)]
pub struct WeavingExample {
    pub name: ExampleName,
    pub dim: usize,
    pub frames: [Frame; 2],
    /// Orthogonal projection onto `span{e2, ..., e_dim}`.
    pub k: KOperator,
    /// Orthogonal projection onto `span{e3, ..., e_dim}` (`example_pr2` only).
    pub u: Option<ComplexMatrix>,
}

impl WeavingExample {
    pub fn count(&self) -> usize {
        self.frames[0].count()
    }
}

/// Zero-based basis index patterns (`Some(k)` is `e_{k+1}`).
type Pattern = Vec<Option<usize>>;

fn patterns(name: ExampleName, dim: usize) -> (Pattern, Pattern) {
    match name {
        ExampleName::ExampleA => {
            // n = 2 dim - 1
            let mut phi = vec![None];
            let mut psi = vec![None];
            for k in 1..dim {
                phi.extend([Some(k), None]);
                psi.extend([Some(k), Some(k)]);
            }
            (phi, psi)
        }
        ExampleName::ExampleB => {
            // n = dim + 1
            let mut phi = vec![Some(0), Some(1), None];
            let mut psi = vec![Some(0), None, Some(1)];
            for k in 2..dim {
                phi.push(Some(k));
                psi.push(Some(k));
            }
            (phi, psi)
        }
        ExampleName::ExamplePr2 => {
            // n = 2 dim
            let mut phi = Vec::new();
            for k in 0..dim {
                phi.extend([Some(k), None]);
            }
            let mut psi = vec![None, Some(0), None, Some(1)];
            for k in 2..dim {
                psi.extend([Some(k), Some(k)]);
            }
            (phi, psi)
        }
    }
}

pub fn paper_example(name: ExampleName, dim: usize) -> Result<WeavingExample> {
    if dim < 4 {
        return Err(Error::DimTooSmall(dim));
    }
    let (phi, psi) = patterns(name, dim);
    let frames = [
        Frame::from_basis_pattern(dim, &phi)?,
        Frame::from_basis_pattern(dim, &psi)?,
    ];
    let k = KOperator::new(ComplexMatrix::coordinate_projection(dim, 1..dim))?;
    let u = (name == ExampleName::ExamplePr2)
        .then(|| ComplexMatrix::coordinate_projection(dim, 2..dim));
    Ok(WeavingExample {
        name,
        dim,
        frames,
        k,
        u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_counts() {
        for d in 4..10 {
            assert_eq!(
                paper_example(ExampleName::ExampleA, d).unwrap().count(),
                2 * d - 1
            );
            assert_eq!(
                paper_example(ExampleName::ExampleB, d).unwrap().count(),
                d + 1
            );
            assert_eq!(
                paper_example(ExampleName::ExamplePr2, d).unwrap().count(),
                2 * d
            );
        }
    }

    #[test]
    fn dim_too_small() {
        assert!(matches!(
            paper_example(ExampleName::ExampleA, 3),
            Err(Error::DimTooSmall(3))
        ));
    }

    #[test]
    fn names_parse() {
        for e in ExampleName::ALL {
            assert_eq!(e.as_str().parse::<ExampleName>().unwrap(), e);
        }
        assert!("example_c".parse::<ExampleName>().is_err());
    }
}
