//! JSON interchange: frames, operators and reports. Complex scalars are
//! `[re, im]` pairs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::frames::Frame;
use crate::linalg::{ComplexMatrix, C64};

pub const FRAME_FORMAT: &str = "kweave-frame-v1";
pub const OPERATOR_FORMAT: &str = "kweave-op-v1";
pub const REPORT_FORMAT: &str = "kweave-report-v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameFileV1 {
    pub format_version: String,
    pub dim: usize,
    pub count: usize,
    /// Columns, each `dim` pairs long.
    pub vectors: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorFileV1 {
    pub format_version: String,
    pub dim: usize,
    pub rows: Vec<Vec<[f64; 2]>>,
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn scalar(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

impl FrameFileV1 {
    pub fn from_frame(frame: &Frame) -> Self {
        Self {
            format_version: FRAME_FORMAT.to_string(),
            dim: frame.dim(),
            count: frame.count(),
            vectors: (0..frame.count())
                .map(|j| frame.vector(j).into_iter().map(pair).collect())
                .collect(),
        }
    }

    pub fn to_frame(&self) -> Result<Frame> {
        if self.format_version != FRAME_FORMAT {
            return Err(Error::InvalidFormat(format!(
                "expected format_version {FRAME_FORMAT:?}, got {:?}",
                self.format_version
            )));
        }
        if self.vectors.len() != self.count {
            return Err(Error::InvalidFormat(format!(
                "count is {} but {} vectors given",
                self.count,
                self.vectors.len()
            )));
        }
        let cols: Vec<Vec<C64>> = self
            .vectors
            .iter()
            .map(|c| c.iter().copied().map(scalar).collect())
            .collect();
        Frame::from_columns(self.dim, &cols).map_err(|e| Error::InvalidFormat(e.to_string()))
    }
}

impl OperatorFileV1 {
    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        Ok(Self {
            format_version: OPERATOR_FORMAT.to_string(),
            dim: m.rows(),
            rows: (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| pair(m.get(i, j))).collect())
                .collect(),
        })
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.format_version != OPERATOR_FORMAT {
            return Err(Error::InvalidFormat(format!(
                "expected format_version {OPERATOR_FORMAT:?}, got {:?}",
                self.format_version
            )));
        }
        if self.rows.len() != self.dim || self.rows.iter().any(|r| r.len() != self.dim) {
            return Err(Error::InvalidFormat(format!(
                "operator must be {0}x{0}",
                self.dim
            )));
        }
        let entries: Vec<C64> = self.rows.iter().flatten().copied().map(scalar).collect();
        ComplexMatrix::from_row_major(self.dim, self.dim, entries)
            .map_err(|e| Error::InvalidFormat(e.to_string()))
    }
}

/// File contents together with their SHA-256 digest.
pub struct Loaded<T> {
    pub value: T,
    pub digest: String,
}

fn read_with_digest(path: &Path) -> Result<(Vec<u8>, String)> {
    let bytes = fs::read(path)?;
    let digest = hex::encode(Sha256::digest(&bytes));
    Ok((bytes, digest))
}

pub fn load_frame(path: &Path) -> Result<Loaded<Frame>> {
    let (bytes, digest) = read_with_digest(path)?;
    let file: FrameFileV1 = serde_json::from_slice(&bytes)?;
    Ok(Loaded {
        value: file.to_frame()?,
        digest,
    })
}

pub fn load_operator(path: &Path) -> Result<Loaded<ComplexMatrix>> {
    let (bytes, digest) = read_with_digest(path)?;
    let file: OperatorFileV1 = serde_json::from_slice(&bytes)?;
    Ok(Loaded {
        value: file.to_matrix()?,
        digest,
    })
}

/// Loads either an operator file or a frame file (as its `d x n` synthesis matrix).
pub fn load_matrix(path: &Path) -> Result<Loaded<ComplexMatrix>> {
    let (bytes, digest) = read_with_digest(path)?;
    let probe: serde_json::Value = serde_json::from_slice(&bytes)?;
    let value = match probe.get("format_version").and_then(|v| v.as_str()) {
        Some(FRAME_FORMAT) => serde_json::from_value::<FrameFileV1>(probe)?
            .to_frame()?
            .vectors()
            .clone(),
        Some(OPERATOR_FORMAT) => serde_json::from_value::<OperatorFileV1>(probe)?.to_matrix()?,
        other => {
            return Err(Error::InvalidFormat(format!(
                "unknown format_version {other:?}"
            )))
        }
    };
    Ok(Loaded { value, digest })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn save_frame(path: &Path, frame: &Frame) -> Result<()> {
    write_json(path, &FrameFileV1::from_frame(frame))
}

pub fn save_operator(path: &Path, m: &ComplexMatrix) -> Result<()> {
    write_json(path, &OperatorFileV1::from_matrix(m)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Machine-readable record of one invocation.
#[derive(Clone, Debug, Serialize)]
pub struct ReportFileV1 {
    pub format_version: String,
    pub tool_version: String,
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub seed: Option<u64>,
    pub result: serde_json::Value,
}

impl ReportFileV1 {
    pub fn new(
        command: Vec<String>,
        inputs: Vec<InputDigest>,
        seed: Option<u64>,
        result: serde_json::Value,
    ) -> Self {
        Self {
            format_version: REPORT_FORMAT.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            inputs,
            seed,
            result,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}
