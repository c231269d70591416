//! Binarized eigenvalue map.
//!
//! Every sample with a full `n x n` neighbourhood gets a local 2x2 covariance
//! built from the patch's second-order moments about its intensity centroid.
//! The principal eigenvalue of that covariance, divided by the centre sample,
//! is the eigenvalue map (EVM); thresholding it gives the BEVM.
//!
//! Patch coordinates are 1-based, so a centroid always lies in `[1, n]`. On a
//! constant patch the normalized eigenvalue is `n (n^3 - n) / 12` whatever the
//! intensity: 4200 for the default 15x15 kernel.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::signal2d::PowerMatrix;

/// Default kernel side.
pub const DEFAULT_KERNEL: usize = 15;
/// Default binarization threshold, slightly above the constant-region EVM of 4200.
pub const DEFAULT_THRESHOLD: f64 = 4225.0;
/// Centre values and patch masses at or below this are treated as zero.
pub const DEGENERATE_EPS: f64 = 1e-12;

pub fn check_kernel(n: usize) -> Result<()> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::EvenKernel(n));
    }
    Ok(())
}

/// Normalized eigenvalue of any constant-positive region for kernel side `n`.
pub fn constant_region_evm(n: usize) -> f64 {
    let n = n as f64;
    n * (n * n * n - n) / 12.0
}

/// Row- and column-index kernels used for centroids and moments.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentKernels {
    n: usize,
    b_icent: Vec<f64>,
    b_jcent: Vec<f64>,
}

impl MomentKernels {
    pub fn new(n: usize) -> Result<Self> {
        check_kernel(n)?;
        let mut b_icent = Vec::with_capacity(n * n);
        let mut b_jcent = Vec::with_capacity(n * n);
        for u in 1..=n {
            for v in 1..=n {
                b_icent.push(u as f64);
                b_jcent.push(v as f64);
            }
        }
        Ok(Self { n, b_icent, b_jcent })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    /// Row-index kernel entry at 0-based `(u, v)`; equals `u + 1`.
    pub fn row_index(&self, u: usize, v: usize) -> f64 {
        self.b_icent[u * self.n + v]
    }

    /// Column-index kernel entry at 0-based `(u, v)`; equals `v + 1`.
    pub fn col_index(&self, u: usize, v: usize) -> f64 {
        self.b_jcent[u * self.n + v]
    }

    fn check_patch(&self, patch: &PowerMatrix) -> Result<()> {
        if patch.rows() != self.n || patch.cols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n * self.n,
                actual: patch.rows() * patch.cols(),
            });
        }
        if patch.as_slice().iter().any(|&p| p < 0.0) {
            return Err(Error::NegativePatchValue);
        }
        Ok(())
    }
}

/// Intensity-weighted centroid `(i_cent, j_cent)` of a non-negative patch.
pub fn centroid(patch: &PowerMatrix, kernels: &MomentKernels) -> Result<(f64, f64)> {
    kernels.check_patch(patch)?;
    let values = patch.as_slice();
    let mass: f64 = values.iter().sum();
    if mass <= DEGENERATE_EPS {
        return Err(Error::ZeroMassPatch);
    }
    let si: f64 = values.iter().zip(&kernels.b_icent).map(|(p, b)| p * b).sum();
    let sj: f64 = values.iter().zip(&kernels.b_jcent).map(|(p, b)| p * b).sum();
    Ok((si / mass, sj / mass))
}

/// Entries of the symmetric local covariance `[[i_var, cov_ij], [cov_ij, j_var]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LocalCovariance {
    pub i_var: f64,
    pub j_var: f64,
    pub cov_ij: f64,
}

impl LocalCovariance {
    pub fn principal_eigenvalue(&self) -> f64 {
        principal_eigenvalue(self)
    }
}

/// Central second-order moments about `centroid`, weighted by the patch values.
pub fn second_order_moments(
    patch: &PowerMatrix,
    centroid: (f64, f64),
    kernels: &MomentKernels,
) -> Result<LocalCovariance> {
    kernels.check_patch(patch)?;
    let (ic, jc) = centroid;
    let mut cov = LocalCovariance::default();
    for ((&p, &bi), &bj) in patch.as_slice().iter().zip(&kernels.b_icent).zip(&kernels.b_jcent) {
        let di = bi - ic;
        let dj = bj - jc;
        cov.i_var += di * di * p;
        cov.j_var += dj * dj * p;
        cov.cov_ij += di * dj * p;
    }
    Ok(cov)
}

/// Larger eigenvalue of the symmetric 2x2 matrix, in closed form.
pub fn principal_eigenvalue(cov: &LocalCovariance) -> f64 {
    let mean = 0.5 * (cov.i_var + cov.j_var);
    let half_diff = 0.5 * (cov.i_var - cov.j_var);
    mean + half_diff.hypot(cov.cov_ij)
}

/// Normalized principal-eigenvalue map; samples closer than `(n - 1) / 2` to
/// the border are invalid and hold 0.
#[derive(Clone, Debug, PartialEq)]
pub struct EvmMap {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
    kernel: usize,
}

impl EvmMap {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        valid_for_kernel(self.rows, self.cols, self.kernel, i, j)
    }

    /// `(i, j, value)` for every valid sample, row-major.
    pub fn valid_values(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let h = self.kernel / 2;
        (h..self.rows - h).flat_map(move |i| (h..self.cols - h).map(move |j| (i, j, self.value(i, j))))
    }

    pub fn transpose(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for c in 0..self.cols {
            values.extend((0..self.rows).map(|r| self.value(r, c)));
        }
        Self {
            values,
            rows: self.cols,
            cols: self.rows,
            kernel: self.kernel,
        }
    }
}

#[inline]
fn valid_for_kernel(rows: usize, cols: usize, kernel: usize, i: usize, j: usize) -> bool {
    let h = kernel / 2;
    i >= h && j >= h && i + h < rows && j + h < cols
}

/// Normalized eigenvalue at one sample; `(i, j)` must have a full window.
///
/// Uses raw moments accumulated in a single pass: with mass `S`, first
/// moments `Su`, `Sv` and second moments `Suu`, `Svv`, `Suv`, the central
/// moments are `Suu - Su^2 / S` and so on.
fn evm_at(m: &PowerMatrix, n: usize, i: usize, j: usize) -> f64 {
    let h = n / 2;
    let center = m.get(i, j);
    if center <= DEGENERATE_EPS {
        return 0.0;
    }
    let (mut s, mut su, mut suu, mut sv, mut svv, mut suv) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for u in 0..n {
        let row = &m.row(i + u - h)[j - h..=j + h];
        let (mut rs, mut rv, mut rvv) = (0.0, 0.0, 0.0);
        for (v, &p) in row.iter().enumerate() {
            let vf = (v + 1) as f64;
            rs += p;
            rv += vf * p;
            rvv += vf * vf * p;
        }
        let uf = (u + 1) as f64;
        s += rs;
        su += uf * rs;
        suu += uf * uf * rs;
        sv += rv;
        svv += rvv;
        suv += uf * rv;
    }
    if s <= DEGENERATE_EPS {
        return 0.0;
    }
    let ic = su / s;
    let jc = sv / s;
    let cov = LocalCovariance {
        i_var: (suu - ic * su).max(0.0),
        j_var: (svv - jc * sv).max(0.0),
        cov_ij: suv - ic * sv,
    };
    principal_eigenvalue(&cov) / center
}

/// Eigenvalue map of `m` with an `n x n` kernel.
pub fn evm_map(m: &PowerMatrix, n: usize) -> Result<EvmMap> {
    check_kernel(n)?;
    let (rows, cols) = (m.rows(), m.cols());
    if rows < n || cols < n {
        return Err(Error::MatrixTooSmall { rows, cols, side: n });
    }
    let h = n / 2;
    let mut values = vec![0.0; rows * cols];
    values
        .par_chunks_mut(cols)
        .enumerate()
        .skip(h)
        .take(rows - 2 * h)
        .for_each(|(i, row)| {
            for (j, out) in row.iter_mut().enumerate().take(cols - h).skip(h) {
                *out = evm_at(m, n, i, j);
            }
        });
    Ok(EvmMap {
        values,
        rows,
        cols,
        kernel: n,
    })
}

/// Thresholded eigenvalue map.
#[derive(Clone, Debug, PartialEq)]
pub struct BevmMap {
    bits: Vec<bool>,
    rows: usize,
    cols: usize,
    kernel: usize,
    threshold: f64,
}

impl BevmMap {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn bit(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j]
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        valid_for_kernel(self.rows, self.cols, self.kernel, i, j)
    }

    pub fn valid_mask(&self) -> Vec<bool> {
        (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
            .map(|(i, j)| self.is_valid(i, j))
            .collect()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Sets a bit wherever a valid EVM value is at least `thre`.
pub fn binarize(evm: &EvmMap, thre: f64) -> BevmMap {
    let bits = (0..evm.rows)
        .flat_map(|i| (0..evm.cols).map(move |j| (i, j)))
        .map(|(i, j)| evm.is_valid(i, j) && evm.value(i, j) >= thre)
        .collect();
    BevmMap {
        bits,
        rows: evm.rows,
        cols: evm.cols,
        kernel: evm.kernel,
        threshold: thre,
    }
}
