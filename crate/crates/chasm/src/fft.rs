//! Real FFTs along the height or width axis, plus a deliberately slow
//! naive-DFT path used only as an oracle.
//!
//! Conventions: unnormalized forward transform, `1/n` on the inverse, so
//! `irfft_axis(rfft_axis(x)) == x`. Each spatial line is transformed
//! independently; no transform is taken along the channel dimension.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::tensor::{retained_bins, Axis, FeatureMap, HalfSpectrum};
use crate::{fft_verify_enabled, Error, Result};

/// Residue tolerance for the inverse-transform conjugate-symmetry check.
pub const IMAG_RESIDUE_TOL: f64 = 1e-9;

/// Largest axis extent the naive O(n^2) oracle accepts.
pub const NAIVE_SIZE_CAP: usize = 64;

/// Per-bin weights of the half-spectrum inner product: DC counts once,
/// the Nyquist bin (even lengths only) counts once, every other retained
/// bin stands for a conjugate pair and counts twice.
#[inline]
pub fn bin_weight(k: usize, n: usize) -> f64 {
    let last = retained_bins(n) - 1;
    if k == 0 || (n % 2 == 0 && k == last) {
        1.0
    } else {
        2.0
    }
}

fn gather_line(x: &FeatureMap, axis: Axis, o: usize, c: usize, buf: &mut [Complex64]) {
    match axis {
        Axis::Height => {
            for (h, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(x.get(h, o, c), 0.0);
            }
        }
        Axis::Width => {
            for (w, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(x.get(o, w, c), 0.0);
            }
        }
    }
}

/// Forward real FFT along `axis`: unnormalized, `K = floor(n/2)+1` retained
/// bins per line, channel dimension untouched.
pub fn rfft_axis(x: &FeatureMap, axis: Axis) -> HalfSpectrum {
    let n = x.axis_len(axis);
    let other = x.other_len(axis);
    let k_bins = retained_bins(n);
    let mut out = HalfSpectrum::zeros(axis, n, other, x.c);

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    for o in 0..other {
        for c in 0..x.c {
            gather_line(x, axis, o, c, &mut buf);
            fft.process_with_scratch(&mut buf, &mut scratch);
            for k in 0..k_bins {
                out.set(k, o, c, buf[k]);
            }
        }
    }
    out
}

/// Inverse real FFT with `1/n` normalization. The imaginary residue is
/// discarded; under `--verify-fft` it is first checked against
/// [`IMAG_RESIDUE_TOL`] (relative), failing loudly on a conjugate-symmetry
/// violation upstream.
pub fn irfft_axis(s: &HalfSpectrum, target_len: usize) -> Result<FeatureMap> {
    if retained_bins(target_len) != s.retained {
        return Err(Error::ShapeMismatch(format!(
            "irfft target length {} incompatible with {} retained bins",
            target_len, s.retained
        )));
    }
    let n = target_len;
    let (h, w) = match s.axis {
        Axis::Height => (n, s.other),
        Axis::Width => (s.other, n),
    };
    let mut out = FeatureMap::zeros(h, w, s.c);

    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n);
    let mut full = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); ifft.get_inplace_scratch_len()];

    let verify = fft_verify_enabled();
    let inv_n = 1.0 / n as f64;
    let mut max_im = 0.0f64;
    let mut max_norm = 0.0f64;

    for o in 0..s.other {
        for c in 0..s.c {
            // conjugate-symmetric full spectrum; the self-mirrored bins
            // (DC, and Nyquist for even n) keep whatever imaginary part
            // they carry — it never reaches the real output, and the
            // residue check below measures it
            for k in 0..s.retained {
                full[k] = s.get(k, o, c);
            }
            for k in 1..s.retained {
                let m = n - k;
                if m >= s.retained {
                    full[m] = s.get(k, o, c).conj();
                }
            }
            ifft.process_with_scratch(&mut full, &mut scratch);
            for (j, v) in full.iter().enumerate() {
                let val = v * inv_n;
                if verify {
                    max_im = max_im.max(val.im.abs());
                    max_norm = max_norm.max(val.norm());
                }
                match s.axis {
                    Axis::Height => out.set(j, o, c, val.re),
                    Axis::Width => out.set(o, j, c, val.re),
                }
            }
        }
    }

    if verify {
        let relative = max_im / max_norm.max(f64::MIN_POSITIVE);
        if relative > IMAG_RESIDUE_TOL {
            return Err(Error::ImaginaryResidue { relative, tolerance: IMAG_RESIDUE_TOL });
        }
    }
    Ok(out)
}

/// Naive O(n^2) DFT along `axis`, mathematically identical to [`rfft_axis`].
/// Twiddle angles use exact modular reduction of `k*j mod n`.
pub fn naive_dft_axis(x: &FeatureMap, axis: Axis) -> Result<HalfSpectrum> {
    let n = x.axis_len(axis);
    if n > NAIVE_SIZE_CAP {
        return Err(Error::SizeCap { requested: n, cap: NAIVE_SIZE_CAP });
    }
    let other = x.other_len(axis);
    let k_bins = retained_bins(n);
    let mut out = HalfSpectrum::zeros(axis, n, other, x.c);
    for o in 0..other {
        for c in 0..x.c {
            for k in 0..k_bins {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    let t = (k * j) % n;
                    let ang = -2.0 * PI * t as f64 / n as f64;
                    let v = match axis {
                        Axis::Height => x.get(j, o, c),
                        Axis::Width => x.get(o, j, c),
                    };
                    acc += Complex64::new(ang.cos(), ang.sin()) * v;
                }
                out.set(k, o, c, acc);
            }
        }
    }
    Ok(out)
}

/// Naive inverse: explicit conjugate-symmetric full spectrum, direct
/// summation with `1/n`, real part taken at the end.
pub fn naive_idft_axis(s: &HalfSpectrum, target_len: usize) -> Result<FeatureMap> {
    let n = target_len;
    if n > NAIVE_SIZE_CAP {
        return Err(Error::SizeCap { requested: n, cap: NAIVE_SIZE_CAP });
    }
    if retained_bins(n) != s.retained {
        return Err(Error::ShapeMismatch(format!(
            "naive idft target length {} incompatible with {} retained bins",
            n, s.retained
        )));
    }
    let (h, w) = match s.axis {
        Axis::Height => (n, s.other),
        Axis::Width => (s.other, n),
    };
    let mut out = FeatureMap::zeros(h, w, s.c);
    let mut full = vec![Complex64::new(0.0, 0.0); n];
    for o in 0..s.other {
        for c in 0..s.c {
            for k in 0..s.retained {
                full[k] = s.get(k, o, c);
            }
            for k in 1..s.retained {
                let m = n - k;
                if m >= s.retained {
                    full[m] = s.get(k, o, c).conj();
                }
            }
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, f) in full.iter().enumerate() {
                    let t = (k * j) % n;
                    let ang = 2.0 * PI * t as f64 / n as f64;
                    acc += f * Complex64::new(ang.cos(), ang.sin());
                }
                let val = acc.re / n as f64;
                match s.axis {
                    Axis::Height => out.set(j, o, c, val),
                    Axis::Width => out.set(o, j, c, val),
                }
            }
        }
    }
    Ok(out)
}

/// Half-spectrum inner product with conjugate-pair weighting:
/// `sum_k w_k (Re s_k Re t_k + Im s_k Im t_k)`, `w` from [`bin_weight`].
pub fn half_spectrum_inner(s: &HalfSpectrum, t: &HalfSpectrum) -> f64 {
    assert_eq!(s.data.len(), t.data.len(), "inner product shape mismatch");
    assert_eq!(s.original_len, t.original_len);
    let n = s.original_len;
    let mut acc = 0.0;
    for k in 0..s.retained {
        let wk = bin_weight(k, n);
        for o in 0..s.other {
            for c in 0..s.c {
                let a = s.get(k, o, c);
                let b = t.get(k, o, c);
                acc += wk * (a.re * b.re + a.im * b.im);
            }
        }
    }
    acc
}

/// Adjoint of [`rfft_axis`] with respect to the weighted half-spectrum
/// inner product: `<rfft(x), y>_w = <x, rfft_adjoint(y)>`. Equals
/// `n * irfft(y)`.
pub fn rfft_adjoint(s: &HalfSpectrum, target_len: usize) -> Result<FeatureMap> {
    let mut x = irfft_axis(s, target_len)?;
    let n = target_len as f64;
    for v in &mut x.data {
        *v *= n;
    }
    Ok(x)
}

/// Reverse-mode gradient of [`rfft_axis`]: maps the cotangent of the
/// half-spectrum (coordinates `Re`, `Im` per retained bin) back to the
/// cotangent of the real input. `dx_j = sum_k Re[g_k e^{2 pi i jk/n}]`
/// (no conjugation: `Im S_k` carries a minus sign of its own).
pub fn rfft_backward(g: &HalfSpectrum, target_len: usize) -> Result<FeatureMap> {
    let n = target_len;
    if retained_bins(n) != g.retained {
        return Err(Error::ShapeMismatch(format!(
            "rfft_backward target length {} incompatible with {} retained bins",
            n, g.retained
        )));
    }
    let (h, w) = match g.axis {
        Axis::Height => (n, g.other),
        Axis::Width => (g.other, n),
    };
    let mut out = FeatureMap::zeros(h, w, g.c);
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n);
    let mut full = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); ifft.get_inplace_scratch_len()];
    for o in 0..g.other {
        for c in 0..g.c {
            for f in full.iter_mut() {
                *f = Complex64::new(0.0, 0.0);
            }
            for k in 0..g.retained {
                full[k] = g.get(k, o, c);
            }
            ifft.process_with_scratch(&mut full, &mut scratch);
            for (j, v) in full.iter().enumerate() {
                match g.axis {
                    Axis::Height => out.set(j, o, c, v.re),
                    Axis::Width => out.set(o, j, c, v.re),
                }
            }
        }
    }
    Ok(out)
}

/// Reverse-mode gradient of [`irfft_axis`]: maps the cotangent of the real
/// output to the cotangent of the half-spectrum,
/// `dS_k = (w_k / n) rfft(d)_k` with `w` from [`bin_weight`].
pub fn irfft_backward(d: &FeatureMap, axis: Axis) -> HalfSpectrum {
    let n = d.axis_len(axis);
    let mut g = rfft_axis(d, axis);
    let inv_n = 1.0 / n as f64;
    for k in 0..g.retained {
        let scale = bin_weight(k, n) * inv_n;
        for o in 0..g.other {
            for c in 0..g.c {
                let v = g.get(k, o, c);
                g.set(k, o, c, v * scale);
            }
        }
    }
    g
}
