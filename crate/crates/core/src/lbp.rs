//! Conventional 8-neighbour local binary patterns over a [`PowerMatrix`].
//!
//! Neighbours are visited clockwise starting at the top-left sample, and
//! neighbour `k` sets bit `k` when it is greater than or equal to the centre:
//!
//! ```text
//! 0 1 2
//! 7 c 3
//! 6 5 4
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal2d::PowerMatrix;

/// (row, col) offsets of the eight neighbours in bit order.
const NEIGHBOURS: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)];

#[inline]
fn code_unchecked(m: &PowerMatrix, i: usize, j: usize) -> u8 {
    let center = m.get(i, j);
    let mut code = 0u8;
    for (k, &(di, dj)) in NEIGHBOURS.iter().enumerate() {
        let n = m.get((i as isize + di) as usize, (j as isize + dj) as usize);
        code |= u8::from(n >= center) << k;
    }
    code
}

/// LBP code of the sample at `(i, j)`.
pub fn lbp_code_at(m: &PowerMatrix, i: usize, j: usize) -> Result<u8> {
    if i == 0 || j == 0 || i + 1 >= m.rows() || j + 1 >= m.cols() {
        return Err(Error::OutOfRange {
            row: i,
            col: j,
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    Ok(code_unchecked(m, i, j))
}

/// Code map with a one-sample invalid border.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LbpMap {
    codes: Vec<u8>,
    rows: usize,
    cols: usize,
}

impl LbpMap {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Code at `(i, j)`; border entries hold 0 and are not meaningful.
    pub fn code(&self, i: usize, j: usize) -> u8 {
        self.codes[i * self.cols + j]
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        i >= 1 && j >= 1 && i + 1 < self.rows && j + 1 < self.cols
    }

    pub fn valid_mask(&self) -> Vec<bool> {
        (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
            .map(|(i, j)| self.is_valid(i, j))
            .collect()
    }

    /// Codes at valid samples, row-major.
    pub fn valid_codes(&self) -> impl Iterator<Item = u8> + '_ {
        (1..self.rows - 1).flat_map(move |i| (1..self.cols - 1).map(move |j| self.code(i, j)))
    }
}

pub fn lbp_map(m: &PowerMatrix) -> Result<LbpMap> {
    let (rows, cols) = (m.rows(), m.cols());
    if rows < 3 || cols < 3 {
        return Err(Error::MatrixTooSmall { rows, cols, side: 3 });
    }
    let mut codes = vec![0u8; rows * cols];
    codes
        .par_chunks_mut(cols)
        .enumerate()
        .skip(1)
        .take(rows - 2)
        .for_each(|(i, row)| {
            for (j, c) in row.iter_mut().enumerate().take(cols - 1).skip(1) {
                *c = code_unchecked(m, i, j);
            }
        });
    Ok(LbpMap { codes, rows, cols })
}

/// Number of circular 0/1 transitions in an 8-bit pattern.
pub fn transitions(code: u8) -> u32 {
    (code ^ code.rotate_right(1)).count_ones()
}

/// Histogram binning of LBP codes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LbpBins {
    /// One bin per code (256).
    #[default]
    Full,
    /// 58 uniform patterns (at most two transitions) in ascending code order,
    /// then a single bin for every non-uniform pattern (59 total).
    Uniform,
}

pub const UNIFORM_BINS: usize = 59;

static UNIFORM_TABLE: std::sync::LazyLock<[u8; 256]> = std::sync::LazyLock::new(|| {
    let mut table = [0u8; 256];
    let mut next = 0u8;
    for code in 0..=255u8 {
        table[code as usize] = if transitions(code) <= 2 {
            next += 1;
            next - 1
        } else {
            (UNIFORM_BINS - 1) as u8
        };
    }
    table
});

impl LbpBins {
    pub fn len(self) -> usize {
        match self {
            LbpBins::Full => 256,
            LbpBins::Uniform => UNIFORM_BINS,
        }
    }

    pub fn is_empty(self) -> bool {
        false
    }

    #[inline]
    pub fn bin(self, code: u8) -> usize {
        match self {
            LbpBins::Full => code as usize,
            LbpBins::Uniform => UNIFORM_TABLE[code as usize] as usize,
        }
    }
}

/// Conventional LBP histogram over every valid sample.
pub fn lbp_histogram(map: &LbpMap, bins: LbpBins) -> Vec<f64> {
    let mut hist = vec![0.0; bins.len()];
    for code in map.valid_codes() {
        hist[bins.bin(code)] += 1.0;
    }
    hist
}
