//! 1D power traces and their row-major 2D reshaping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest matrix width any descriptor can work with (one 3x3 neighborhood).
pub const MIN_WIDTH: usize = 3;

/// A sampled real-power trace.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSignal {
    samples: Vec<f64>,
    sample_rate_hz: f64,
    /// Index into the owning dataset's class table, if known.
    pub label: Option<usize>,
}

impl PowerSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::BadSpec(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            label: None,
        })
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Multiplies every sample by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut out = Self::new(self.samples.iter().map(|s| s * factor).collect(), self.sample_rate_hz)?;
        out.label = self.label;
        Ok(out)
    }
}

/// How a trace whose length is not a multiple of the width fills the last row.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PadPolicy {
    /// Fill the missing tail with zeros.
    ZeroPad,
    /// Repeat the final sample.
    EdgeReplicate,
    /// Drop the incomplete last row.
    #[default]
    Truncate,
}

impl std::str::FromStr for PadPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" | "zeropad" | "zero-pad" => Ok(PadPolicy::ZeroPad),
            "edge" | "edgereplicate" | "edge-replicate" => Ok(PadPolicy::EdgeReplicate),
            "truncate" => Ok(PadPolicy::Truncate),
            other => Err(Error::BadSpec(format!("unknown pad policy '{other}'"))),
        }
    }
}

impl std::fmt::Display for PadPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PadPolicy::ZeroPad => "zero-pad",
            PadPolicy::EdgeReplicate => "edge-replicate",
            PadPolicy::Truncate => "truncate",
        })
    }
}

/// Dense row-major matrix of power values.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerMatrix {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl PowerMatrix {
    /// Builds a matrix from row-major values. Entries must be finite.
    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::MatrixTooSmall { rows, cols, side: 1 });
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        Ok(Self { values, rows, cols })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::InconsistentDimensions {
                row,
                expected: cols,
                actual: r.len(),
            });
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn constant(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::from_vec(rows, cols, vec![value; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    /// Row-major flattening; inverse of [`reshape_to_matrix`] up to padding.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn transpose(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for c in 0..self.cols {
            values.extend((0..self.rows).map(|r| self.get(r, c)));
        }
        Self {
            values,
            rows: self.cols,
            cols: self.rows,
        }
    }

    /// Applies `f` to every entry; fails if the result is not finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_vec(self.rows, self.cols, self.values.iter().map(|&v| f(v)).collect())
    }
}

/// Near-square width for a trace of `len` samples: `ceil(sqrt(len))`.
pub fn default_width(len: usize) -> usize {
    let mut w = (len as f64).sqrt() as usize;
    while w * w < len {
        w += 1;
    }
    while w > 1 && (w - 1) * (w - 1) >= len {
        w -= 1;
    }
    w.max(MIN_WIDTH)
}

/// Fills a `rows x width` matrix with the signal in row-major order.
pub fn reshape_to_matrix(signal: &PowerSignal, width: usize, policy: PadPolicy) -> Result<PowerMatrix> {
    if width < MIN_WIDTH {
        return Err(Error::WidthTooSmall { width, min: MIN_WIDTH });
    }
    let samples = signal.samples();
    let len = samples.len();
    let mut values = match policy {
        PadPolicy::Truncate => {
            let rows = len / width;
            if rows == 0 {
                return Err(Error::EmptyAfterTruncate { len, width });
            }
            samples[..rows * width].to_vec()
        }
        PadPolicy::ZeroPad | PadPolicy::EdgeReplicate => {
            let rows = len.div_ceil(width);
            let fill = match policy {
                PadPolicy::ZeroPad => 0.0,
                _ => samples[len - 1],
            };
            let mut v = Vec::with_capacity(rows * width);
            v.extend_from_slice(samples);
            v.resize(rows * width, fill);
            v
        }
    };
    values.shrink_to_fit();
    let rows = values.len() / width;
    PowerMatrix::from_vec(rows, width, values)
}
