//! LBP-BEVM signatures: the LBP code map split by BEVM bit into an "up"
//! histogram (bit set) and a "down" histogram (bit clear), concatenated.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bevm::{self, BevmMap};
use crate::error::{Error, Result};
use crate::lbp::{self, LbpBins, LbpMap};
use crate::signal2d::{self, PadPolicy, PowerSignal};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// Raw sample counts.
    Counts,
    /// Divide by the total so the vector sums to one.
    #[default]
    L1,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "counts" => Ok(Normalization::Counts),
            "l1" => Ok(Normalization::L1),
            other => Err(Error::BadSpec(format!("unknown normalization '{other}'"))),
        }
    }
}

impl std::fmt::Display for Normalization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Normalization::Counts => "counts",
            Normalization::L1 => "l1",
        })
    }
}

/// Which signature to compute.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Descriptor {
    /// Up/down histograms partitioned by the BEVM.
    #[default]
    LbpBevm,
    /// Conventional LBP histogram over the whole code map.
    Lbp,
}

impl std::str::FromStr for Descriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lbp-bevm" | "lbpbevm" => Ok(Descriptor::LbpBevm),
            "lbp" => Ok(Descriptor::Lbp),
            other => Err(Error::BadSpec(format!("unknown descriptor '{other}'"))),
        }
    }
}

impl std::fmt::Display for Descriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Descriptor::LbpBevm => "lbp-bevm",
            Descriptor::Lbp => "lbp",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    /// Matrix width; `None` picks `ceil(sqrt(len))` per signal.
    pub width: Option<usize>,
    pub pad: PadPolicy,
    /// Odd BEVM kernel side.
    pub kernel: usize,
    pub threshold: f64,
    pub bins: LbpBins,
    pub normalization: Normalization,
    pub descriptor: Descriptor,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            width: None,
            pad: PadPolicy::default(),
            kernel: bevm::DEFAULT_KERNEL,
            threshold: bevm::DEFAULT_THRESHOLD,
            bins: LbpBins::Full,
            normalization: Normalization::L1,
            descriptor: Descriptor::LbpBevm,
        }
    }
}

impl ExtractionConfig {
    /// Width used for a signal of `len` samples, checked against the kernel.
    pub fn resolve_width(&self, len: usize) -> Result<usize> {
        bevm::check_kernel(self.kernel)?;
        let width = self.width.unwrap_or_else(|| signal2d::default_width(len));
        let min = signal2d::MIN_WIDTH.max(self.kernel);
        if width < min {
            return Err(Error::WidthTooSmall { width, min });
        }
        Ok(width)
    }

    /// Feature dimension produced by this configuration.
    pub fn dimension(&self) -> usize {
        match self.descriptor {
            Descriptor::LbpBevm => 2 * self.bins.len(),
            Descriptor::Lbp => self.bins.len(),
        }
    }
}

/// Concatenated up and down histograms.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    normalization: Normalization,
}

impl FeatureVector {
    pub fn new(h_up: Vec<f64>, h_down: Vec<f64>, normalization: Normalization) -> Result<Self> {
        if h_up.len() != h_down.len() {
            return Err(Error::DimensionMismatch {
                expected: h_up.len(),
                actual: h_down.len(),
            });
        }
        let mut values = h_up;
        values.extend(h_down);
        normalize(&mut values, normalization);
        Ok(Self { values, normalization })
    }

    pub fn h_up(&self) -> &[f64] {
        &self.values[..self.values.len() / 2]
    }

    pub fn h_down(&self) -> &[f64] {
        &self.values[self.values.len() / 2..]
    }

    pub fn concatenated(&self) -> &[f64] {
        &self.values
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn normalize(values: &mut [f64], normalization: Normalization) {
    if normalization == Normalization::L1 {
        let total: f64 = values.iter().sum();
        if total > 0.0 {
            values.iter_mut().for_each(|v| *v /= total);
        }
    }
}

/// Up/down histograms over samples valid in both maps.
pub fn partition_histograms(lbp: &LbpMap, bevm: &BevmMap, bins: LbpBins) -> Result<(Vec<f64>, Vec<f64>)> {
    if lbp.rows() != bevm.rows() || lbp.cols() != bevm.cols() {
        return Err(Error::DimensionMismatch {
            expected: lbp.rows() * lbp.cols(),
            actual: bevm.rows() * bevm.cols(),
        });
    }
    let mut up = vec![0.0; bins.len()];
    let mut down = vec![0.0; bins.len()];
    for i in 0..lbp.rows() {
        for j in 0..lbp.cols() {
            if !(lbp.is_valid(i, j) && bevm.is_valid(i, j)) {
                continue;
            }
            let bin = bins.bin(lbp.code(i, j));
            if bevm.bit(i, j) {
                up[bin] += 1.0;
            } else {
                down[bin] += 1.0;
            }
        }
    }
    Ok((up, down))
}

fn matrix_for(signal: &PowerSignal, config: &ExtractionConfig) -> Result<signal2d::PowerMatrix> {
    let width = config.resolve_width(signal.len())?;
    let m = signal2d::reshape_to_matrix(signal, width, config.pad)?;
    let side = match config.descriptor {
        Descriptor::LbpBevm => config.kernel,
        Descriptor::Lbp => 3,
    };
    if m.rows() < side {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            rows: m.rows(),
            cols: m.cols(),
            side,
        });
    }
    Ok(m)
}

/// Reshape, code, binarize, partition and normalize one trace.
pub fn extract_lbp_bevm(signal: &PowerSignal, config: &ExtractionConfig) -> Result<FeatureVector> {
    let m = matrix_for(
        signal,
        &ExtractionConfig {
            descriptor: Descriptor::LbpBevm,
            ..*config
        },
    )?;
    let (codes, evm) = rayon::join(|| lbp::lbp_map(&m), || bevm::evm_map(&m, config.kernel));
    let bevm = bevm::binarize(&evm?, config.threshold);
    let (up, down) = partition_histograms(&codes?, &bevm, config.bins)?;
    FeatureVector::new(up, down, config.normalization)
}

/// Conventional LBP histogram of one trace.
pub fn extract_lbp(signal: &PowerSignal, config: &ExtractionConfig) -> Result<Vec<f64>> {
    let m = matrix_for(
        signal,
        &ExtractionConfig {
            descriptor: Descriptor::Lbp,
            ..*config
        },
    )?;
    let mut hist = lbp::lbp_histogram(&lbp::lbp_map(&m)?, config.bins);
    normalize(&mut hist, config.normalization);
    Ok(hist)
}

/// Feature row for `signal` under the configured descriptor.
pub fn extract(signal: &PowerSignal, config: &ExtractionConfig) -> Result<Vec<f64>> {
    match config.descriptor {
        Descriptor::LbpBevm => extract_lbp_bevm(signal, config).map(FeatureVector::into_values),
        Descriptor::Lbp => extract_lbp(signal, config),
    }
}

/// Extracts every signal in parallel, preserving order.
pub fn extract_all(signals: &[PowerSignal], config: &ExtractionConfig) -> Result<Vec<Vec<f64>>> {
    signals.par_iter().map(|s| extract(s, config)).collect()
}
