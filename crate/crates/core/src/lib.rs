//! Frames, K-frames and weaving certification in `C^d`.
//!
//! Frames are `d x n` complex matrices whose columns are the frame vectors.
//! The crate computes frame and K-frame bounds, decides whether a family of
//! K-frames is woven by enumerating every partition of the index set, checks
//! Douglas' range-inclusion conditions, and evaluates a perturbation criterion
//! for woven K-frames against exhaustive search.

pub mod cli;
pub mod error;
pub mod frames;
pub mod kframe;
pub mod linalg;
pub mod perturbation;
pub mod weaving;

pub use error::{Error, Result};
pub use frames::{BoundsPair, Frame};
pub use kframe::{DouglasReport, KFrameReport, KOperator};
pub use linalg::{ComplexMatrix, SpectralSummary, C64};
pub use weaving::{CertifyOptions, Partition, SearchMode, WeavingReport};
