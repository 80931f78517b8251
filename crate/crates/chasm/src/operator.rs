//! One axis's harmonized spectral operator family: skew-symmetric
//! coordinates -> orthogonal basis via the matrix exponential, gain table ->
//! interpolated per-frequency gains, and application of
//! `M(k) = U diag(lambda_k) U^T` to complex coefficient vectors.

use num_complex::Complex64;

use crate::linalg::{matrix_exp, Mat};
use crate::tensor::Axis;

/// Skew-symmetric coordinates for one axis basis: the strictly lower
/// triangle of a C x C matrix, packed row-major. Length is exactly
/// `C(C-1)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewParams {
    pub theta: Vec<f64>,
    pub channels: usize,
}

impl SkewParams {
    pub fn zeros(channels: usize) -> Self {
        SkewParams { theta: vec![0.0; channels * (channels - 1) / 2], channels }
    }

    pub fn from_vec(theta: Vec<f64>, channels: usize) -> Self {
        assert_eq!(
            theta.len(),
            channels * (channels - 1) / 2,
            "skew parameter count must be C(C-1)/2"
        );
        SkewParams { theta, channels }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

/// Row-major packing order of the strictly lower triangle: (1,0), (2,0),
/// (2,1), (3,0), ... This is the canonical serialization order.
pub fn lower_triangle_index_pairs(channels: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(channels * (channels - 1) / 2);
    for i in 1..channels {
        for j in 0..i {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Builds the skew-symmetric matrix: `A_ij = theta_ij` for `i > j`,
/// `-theta_ji` for `i < j`, zero on the diagonal. `A = -A^T` holds exactly.
pub fn build_skew(p: &SkewParams) -> Mat {
    let c = p.channels;
    let mut a = Mat::zeros(c, c);
    let mut idx = 0;
    for i in 1..c {
        for j in 0..i {
            let t = p.theta[idx];
            a.set(i, j, t);
            a.set(j, i, -t);
            idx += 1;
        }
    }
    a
}

/// Learned orthogonal channel basis, an SO(C) representative.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis {
    pub u: Mat,
}

impl OrthoBasis {
    /// Max-entry deviation of `U^T U` from the identity.
    pub fn orthogonality_defect(&self) -> f64 {
        let gram = self.u.transpose().matmul(&self.u);
        gram.max_abs_diff(&Mat::identity(self.u.rows))
    }

    pub fn det(&self) -> f64 {
        self.u.det()
    }
}

/// `U = exp(A(theta))`; zero parameters short-circuit to the exact identity.
pub fn basis_from_params(p: &SkewParams) -> OrthoBasis {
    if p.theta.iter().all(|t| *t == 0.0) {
        return OrthoBasis { u: Mat::identity(p.channels) };
    }
    OrthoBasis { u: matrix_exp(&build_skew(p)) }
}

/// Learnable gain table: raw (pre-activation) `B x C` values.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    /// Raw values, `bins x channels`, row-major.
    pub gamma: Mat,
}

impl GainTable {
    pub fn new(gamma: Mat) -> Self {
        assert!(gamma.rows >= 1 && gamma.cols >= 1);
        GainTable { gamma }
    }

    pub fn filled(bins: usize, channels: usize, value: f64) -> Self {
        GainTable { gamma: Mat { data: vec![value; bins * channels], rows: bins, cols: channels } }
    }

    pub fn bins(&self) -> usize {
        self.gamma.rows
    }

    pub fn channels(&self) -> usize {
        self.gamma.cols
    }
}

/// Interpolated per-frequency gains, `K x C`. Strictly positive when built
/// in positive mode.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVectors {
    pub lambda: Mat,
}

impl GainVectors {
    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        &self.lambda.data[k * self.lambda.cols..(k + 1) * self.lambda.cols]
    }

    pub fn bins(&self) -> usize {
        self.lambda.rows
    }
}

/// Activation applied after interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainMode {
    /// softplus: strictly positive gains (the default operator family).
    Positive,
    /// identity: unconstrained signed gains (ablation).
    Signed,
}

/// Overflow-safe softplus `ln(1 + e^x)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic sigmoid, the softplus derivative.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Raw table value that maps to unit gain: `softplus^-1(1) = ln(e - 1)`.
pub fn identity_gain_raw() -> f64 {
    (std::f64::consts::E - 1.0).ln()
}

/// Interpolation weights for bin `k` of `target_bins` against a table with
/// `table_bins` rows: `(lower row, upper row, upper fraction)`.
///
/// The table coordinate is `p = (k/(K-1)) * (B-1)` with exact endpoint
/// inclusion; `B = 1` broadcasts row 0 and `K = 1` reads coordinate 0.
#[inline]
pub fn interp_weights(k: usize, target_bins: usize, table_bins: usize) -> (usize, usize, f64) {
    if table_bins == 1 || target_bins == 1 {
        return (0, 0, 0.0);
    }
    let p = k as f64 / (target_bins - 1) as f64 * (table_bins - 1) as f64;
    let i0 = (p.floor() as usize).min(table_bins - 1);
    let i1 = (i0 + 1).min(table_bins - 1);
    let frac = p - i0 as f64;
    (i0, i1, frac)
}

/// Interpolates the raw table along the normalized rFFT frequency
/// coordinate to `target_bins` rows, then applies the activation. When the
/// table already has `target_bins` rows, rows map through directly.
pub fn interpolate_gains(table: &GainTable, target_bins: usize, mode: GainMode) -> GainVectors {
    let b = table.bins();
    let c = table.channels();
    let mut lambda = Mat::zeros(target_bins, c);
    for k in 0..target_bins {
        for ch in 0..c {
            let pre = if b == target_bins {
                table.gamma.at(k, ch)
            } else {
                let (i0, i1, frac) = interp_weights(k, target_bins, b);
                if frac == 0.0 {
                    table.gamma.at(i0, ch)
                } else {
                    (1.0 - frac) * table.gamma.at(i0, ch) + frac * table.gamma.at(i1, ch)
                }
            };
            let v = match mode {
                GainMode::Positive => softplus(pre),
                GainMode::Signed => pre,
            };
            lambda.set(k, ch, v);
        }
    }
    GainVectors { lambda }
}

/// Applies `M(k) = U diag(lambda_k) U^T` to one complex coefficient vector
/// as `U (lambda ct (U^T v))`, the same real matrix acting on the real and
/// imaginary parts. The dense matrix is never materialized.
pub fn apply_operator(u: &Mat, lambda_k: &[f64], v: &[Complex64]) -> Vec<Complex64> {
    let c = u.rows;
    assert_eq!(lambda_k.len(), c);
    assert_eq!(v.len(), c);
    let mut t = vec![Complex64::new(0.0, 0.0); c];
    // t = U^T v
    for i in 0..c {
        let mut re = 0.0;
        let mut im = 0.0;
        for j in 0..c {
            let uji = u.at(j, i);
            re += uji * v[j].re;
            im += uji * v[j].im;
        }
        t[i] = Complex64::new(re * lambda_k[i], im * lambda_k[i]);
    }
    // out = U t
    let mut out = vec![Complex64::new(0.0, 0.0); c];
    for (i, o) in out.iter_mut().enumerate() {
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, tj) in t.iter().enumerate() {
            let uij = u.at(i, j);
            re += uij * tj.re;
            im += uij * tj.im;
        }
        *o = Complex64::new(re, im);
    }
    out
}

/// Materializes `M(k) = U diag(lambda_k) U^T`. Verification-only: the hot
/// path always uses the factored form.
pub fn dense_operator(u: &Mat, lambda_k: &[f64]) -> Mat {
    let c = u.rows;
    assert_eq!(lambda_k.len(), c);
    let mut scaled = Mat::zeros(c, c);
    for i in 0..c {
        for j in 0..c {
            scaled.set(i, j, u.at(i, j) * lambda_k[j]);
        }
    }
    scaled.matmul(&u.transpose())
}

/// Row permutation of a gain table: `(sigma . table)[k, :] =
/// table[sigma^-1(k), :]`. `sigma[i]` is the new index of old row `i`.
pub fn reindex_gains(table: &Mat, sigma: &[usize]) -> Mat {
    assert_eq!(table.rows, sigma.len(), "permutation length mismatch");
    let mut seen = vec![false; sigma.len()];
    for &s in sigma {
        assert!(s < sigma.len() && !seen[s], "not a permutation");
        seen[s] = true;
    }
    let mut out = Mat::zeros(table.rows, table.cols);
    for (old, &new) in sigma.iter().enumerate() {
        for j in 0..table.cols {
            out.set(new, j, table.at(old, j));
        }
    }
    out
}

/// Shared-basis parameters for one axis: skew coordinates plus gain table.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisOperatorParams {
    pub axis: Axis,
    pub skew: SkewParams,
    pub gains: GainTable,
}

impl AxisOperatorParams {
    /// Identity initialization: zero skew (U = I) and a table filled with
    /// the raw value that softplus maps to unit gain.
    pub fn identity_init(axis: Axis, channels: usize, bins: usize) -> Self {
        AxisOperatorParams {
            axis,
            skew: SkewParams::zeros(channels),
            gains: GainTable::filled(bins, channels, identity_gain_raw()),
        }
    }

    pub fn channels(&self) -> usize {
        self.skew.channels
    }

    /// Trainable scalar count: `C(C-1)/2 + B*C`.
    pub fn param_count(&self) -> usize {
        self.skew.len() + self.gains.bins() * self.gains.channels()
    }
}
