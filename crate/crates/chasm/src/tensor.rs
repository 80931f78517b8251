//! Dense real and complex tensors for the mixer.
//!
//! Storage is channel-fastest (`[h][w][c]` with `c` contiguous) so that the
//! C coefficients of one Fourier line sit next to each other; operator
//! application is a C x C product per (bin, position).

use num_complex::Complex64;

use crate::{Error, Result};

/// Spatial axis a one-dimensional transform runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Height,
    Width,
}

/// Real `H x W x C` feature tensor, the mixer's input/output domain.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub data: Vec<f64>,
    pub h: usize,
    pub w: usize,
    pub c: usize,
}

impl FeatureMap {
    pub fn zeros(h: usize, w: usize, c: usize) -> Self {
        assert!(h >= 1 && w >= 1 && c >= 1, "dims must be >= 1");
        FeatureMap { data: vec![0.0; h * w * c], h, w, c }
    }

    pub fn from_vec(data: Vec<f64>, h: usize, w: usize, c: usize) -> Result<Self> {
        if data.len() != h * w * c {
            return Err(Error::ShapeMismatch(format!(
                "feature map data length {} != {}x{}x{}",
                data.len(),
                h,
                w,
                c
            )));
        }
        Ok(FeatureMap { data, h, w, c })
    }

    #[inline]
    pub fn idx(&self, h: usize, w: usize, c: usize) -> usize {
        (h * self.w + w) * self.c + c
    }

    #[inline]
    pub fn get(&self, h: usize, w: usize, c: usize) -> f64 {
        self.data[self.idx(h, w, c)]
    }

    #[inline]
    pub fn set(&mut self, h: usize, w: usize, c: usize, v: f64) {
        let i = self.idx(h, w, c);
        self.data[i] = v;
    }

    pub fn same_shape(&self, other: &FeatureMap) -> bool {
        self.h == other.h && self.w == other.w && self.c == other.c
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Elementwise `self + other`.
    pub fn add(&self, other: &FeatureMap) -> FeatureMap {
        assert!(self.same_shape(other), "shape mismatch in add");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        FeatureMap { data, h: self.h, w: self.w, c: self.c }
    }

    /// Elementwise `a*self + b*other`.
    pub fn lincomb(&self, a: f64, other: &FeatureMap, b: f64) -> FeatureMap {
        assert!(self.same_shape(other), "shape mismatch in lincomb");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| a * x + b * y)
            .collect();
        FeatureMap { data, h: self.h, w: self.w, c: self.c }
    }

    pub fn max_abs_diff(&self, other: &FeatureMap) -> f64 {
        assert!(self.same_shape(other), "shape mismatch in max_abs_diff");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Extent of the given axis.
    pub fn axis_len(&self, axis: Axis) -> usize {
        match axis {
            Axis::Height => self.h,
            Axis::Width => self.w,
        }
    }

    /// Extent of the non-transformed spatial axis.
    pub fn other_len(&self, axis: Axis) -> usize {
        match axis {
            Axis::Height => self.w,
            Axis::Width => self.h,
        }
    }
}

/// Complex half-spectrum along one axis, `K x other x C` with
/// `K = floor(original_len/2) + 1`. Conjugate symmetry of the omitted bins
/// is implied by the storage; DC (and Nyquist, for even lengths) stay real
/// under any real channel operator.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpectrum {
    pub data: Vec<Complex64>,
    pub axis: Axis,
    /// Axis length before the transform (H or W).
    pub original_len: usize,
    /// Retained bins, `floor(original_len/2) + 1`.
    pub retained: usize,
    /// Extent of the non-transformed spatial axis.
    pub other: usize,
    pub c: usize,
}

/// Number of retained rFFT bins for an axis of length `n`.
pub fn retained_bins(n: usize) -> usize {
    n / 2 + 1
}

impl HalfSpectrum {
    pub fn zeros(axis: Axis, original_len: usize, other: usize, c: usize) -> Self {
        let retained = retained_bins(original_len);
        HalfSpectrum {
            data: vec![Complex64::new(0.0, 0.0); retained * other * c],
            axis,
            original_len,
            retained,
            other,
            c,
        }
    }

    #[inline]
    pub fn idx(&self, k: usize, o: usize, c: usize) -> usize {
        (k * self.other + o) * self.c + c
    }

    #[inline]
    pub fn get(&self, k: usize, o: usize, c: usize) -> Complex64 {
        self.data[self.idx(k, o, c)]
    }

    #[inline]
    pub fn set(&mut self, k: usize, o: usize, c: usize, v: Complex64) {
        let i = self.idx(k, o, c);
        self.data[i] = v;
    }

    /// Channel slice at one (bin, position).
    #[inline]
    pub fn line(&self, k: usize, o: usize) -> &[Complex64] {
        let base = (k * self.other + o) * self.c;
        &self.data[base..base + self.c]
    }

    #[inline]
    pub fn line_mut(&mut self, k: usize, o: usize) -> &mut [Complex64] {
        let base = (k * self.other + o) * self.c;
        &mut self.data[base..base + self.c]
    }

    pub fn max_abs_diff(&self, other: &HalfSpectrum) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_channel_fastest() {
        let mut x = FeatureMap::zeros(2, 3, 4);
        x.set(1, 2, 3, 7.0);
        assert_eq!(x.data[(1 * 3 + 2) * 4 + 3], 7.0);
        // adjacent channels are adjacent in memory
        assert_eq!(x.idx(1, 2, 3) - x.idx(1, 2, 2), 1);
    }

    #[test]
    fn retained_bin_counts() {
        assert_eq!(retained_bins(1), 1);
        assert_eq!(retained_bins(4), 3);
        assert_eq!(retained_bins(5), 3);
        assert_eq!(retained_bins(8), 5);
    }

    #[test]
    fn lincomb_matches_elementwise() {
        let x = FeatureMap::from_vec(vec![1.0, 2.0, 3.0, 4.0], 2, 2, 1).unwrap();
        let y = FeatureMap::from_vec(vec![0.5, 0.5, 0.5, 0.5], 2, 2, 1).unwrap();
        let z = x.lincomb(2.0, &y, -2.0);
        assert_eq!(z.data, vec![1.0, 3.0, 5.0, 7.0]);
    }
}
