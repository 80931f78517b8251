//! The axis-separable spectral core (CH and CW plane passes and their
//! compositions), the full mixer block with local refinement, fusion and
//! residual, and the ablation-variant cores.

use num_complex::Complex64;

use crate::fft::{irfft_axis, rfft_axis};
use crate::linalg::Mat;
use crate::operator::{
    basis_from_params, identity_gain_raw, interpolate_gains, GainMode, GainTable, SkewParams,
};
use crate::tensor::{retained_bins, Axis, FeatureMap};
use crate::{Error, Result};

/// Spectral-core family. Names match the CLI `--variant` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Chasm,
    IdentityBasis,
    UntiedBasis,
    SignedGain,
    ComplexGain,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Chasm,
        Variant::IdentityBasis,
        Variant::UntiedBasis,
        Variant::SignedGain,
        Variant::ComplexGain,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Chasm => "Chasm",
            Variant::IdentityBasis => "IdentityBasis",
            Variant::UntiedBasis => "UntiedBasis",
            Variant::SignedGain => "SignedGain",
            Variant::ComplexGain => "ComplexGain",
        }
    }

    pub fn parse(s: &str) -> Result<Variant> {
        Variant::ALL
            .iter()
            .copied()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown variant '{s}'")))
    }
}

/// Axis composition of the spectral core. Names match `--axis-mode`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisMode {
    ChOnly,
    CwOnly,
    ChThenCw,
    CwThenCh,
    ChPlusCw,
}

impl AxisMode {
    pub const ALL: [AxisMode; 5] = [
        AxisMode::ChOnly,
        AxisMode::CwOnly,
        AxisMode::ChThenCw,
        AxisMode::CwThenCh,
        AxisMode::ChPlusCw,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AxisMode::ChOnly => "ChOnly",
            AxisMode::CwOnly => "CwOnly",
            AxisMode::ChThenCw => "ChThenCw",
            AxisMode::CwThenCh => "CwThenCh",
            AxisMode::ChPlusCw => "ChPlusCw",
        }
    }

    pub fn parse(s: &str) -> Result<AxisMode> {
        AxisMode::ALL
            .iter()
            .copied()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown axis mode '{s}'")))
    }
}

/// Spectral parameters for one axis. The layout depends on the variant.
#[derive(Debug, Clone, PartialEq)]
pub enum AxisCoreParams {
    /// Shared orthogonal basis plus one gain table (Chasm and SignedGain).
    Shared { axis: Axis, skew: SkewParams, gains: GainTable },
    /// Fixed identity basis; only the gains are learned.
    Identity { axis: Axis, gains: GainTable },
    /// One basis and one direct gain row per retained frequency.
    Untied { axis: Axis, skews: Vec<SkewParams>, gains: GainTable },
    /// Shared basis with complex gains `softplus(mag) * exp(i*phase)`;
    /// phases are pinned to zero at DC and (for even lengths) Nyquist so
    /// the inverse rFFT output stays real.
    Complex { axis: Axis, skew: SkewParams, magnitude: GainTable, phase: GainTable },
}

impl AxisCoreParams {
    pub fn axis(&self) -> Axis {
        match self {
            AxisCoreParams::Shared { axis, .. }
            | AxisCoreParams::Identity { axis, .. }
            | AxisCoreParams::Untied { axis, .. }
            | AxisCoreParams::Complex { axis, .. } => *axis,
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            AxisCoreParams::Shared { skew, .. } => skew.channels,
            AxisCoreParams::Identity { gains, .. } => gains.channels(),
            AxisCoreParams::Untied { gains, .. } => gains.channels(),
            AxisCoreParams::Complex { skew, .. } => skew.channels,
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            AxisCoreParams::Shared { skew, gains, .. } => {
                skew.len() + gains.bins() * gains.channels()
            }
            AxisCoreParams::Identity { gains, .. } => gains.bins() * gains.channels(),
            AxisCoreParams::Untied { skews, gains, .. } => {
                skews.iter().map(|s| s.len()).sum::<usize>() + gains.bins() * gains.channels()
            }
            AxisCoreParams::Complex { skew, magnitude, phase, .. } => {
                skew.len()
                    + magnitude.bins() * magnitude.channels()
                    + phase.bins() * phase.channels()
            }
        }
    }

    /// Identity initialization for the given variant: the prepared operator
    /// is the identity map at every bin.
    pub fn identity_init(
        variant: Variant,
        axis: Axis,
        channels: usize,
        bins: usize,
        axis_len: usize,
    ) -> AxisCoreParams {
        match variant {
            Variant::Chasm => AxisCoreParams::Shared {
                axis,
                skew: SkewParams::zeros(channels),
                gains: GainTable::filled(bins, channels, identity_gain_raw()),
            },
            // without softplus the raw table holds the gains directly
            Variant::SignedGain => AxisCoreParams::Shared {
                axis,
                skew: SkewParams::zeros(channels),
                gains: GainTable::filled(bins, channels, 1.0),
            },
            Variant::IdentityBasis => AxisCoreParams::Identity {
                axis,
                gains: GainTable::filled(bins, channels, identity_gain_raw()),
            },
            Variant::UntiedBasis => {
                let k = retained_bins(axis_len);
                AxisCoreParams::Untied {
                    axis,
                    skews: vec![SkewParams::zeros(channels); k],
                    gains: GainTable::filled(k, channels, identity_gain_raw()),
                }
            }
            Variant::ComplexGain => AxisCoreParams::Complex {
                axis,
                skew: SkewParams::zeros(channels),
                magnitude: GainTable::filled(bins, channels, identity_gain_raw()),
                phase: GainTable::filled(bins, channels, 0.0),
            },
        }
    }

    fn matches_variant(&self, variant: Variant) -> bool {
        matches!(
            (self, variant),
            (AxisCoreParams::Shared { .. }, Variant::Chasm)
                | (AxisCoreParams::Shared { .. }, Variant::SignedGain)
                | (AxisCoreParams::Identity { .. }, Variant::IdentityBasis)
                | (AxisCoreParams::Untied { .. }, Variant::UntiedBasis)
                | (AxisCoreParams::Complex { .. }, Variant::ComplexGain)
        )
    }

    fn layout_name(&self) -> &'static str {
        match self {
            AxisCoreParams::Shared { .. } => "shared-basis",
            AxisCoreParams::Identity { .. } => "identity-basis",
            AxisCoreParams::Untied { .. } => "untied",
            AxisCoreParams::Complex { .. } => "complex-gain",
        }
    }

    /// Resolve against an axis length: exponentiate bases, interpolate
    /// gains, pin complex phases at the self-mirrored bins.
    pub fn prepare(&self, variant: Variant, axis_len: usize) -> Result<PreparedAxisOp> {
        if !self.matches_variant(variant) {
            return Err(Error::VariantMismatch(format!(
                "{} params do not fit variant {}",
                self.layout_name(),
                variant.name()
            )));
        }
        let k = retained_bins(axis_len);
        let c = self.channels();
        let kind = match self {
            AxisCoreParams::Shared { skew, gains, .. } => {
                let mode = if variant == Variant::SignedGain {
                    GainMode::Signed
                } else {
                    GainMode::Positive
                };
                PreparedKind::Real {
                    basis: Some(basis_from_params(skew).u),
                    gains: interpolate_gains(gains, k, mode).lambda,
                }
            }
            AxisCoreParams::Identity { gains, .. } => PreparedKind::Real {
                basis: None,
                gains: interpolate_gains(gains, k, GainMode::Positive).lambda,
            },
            AxisCoreParams::Untied { skews, gains, .. } => {
                if skews.len() != k || gains.bins() != k {
                    return Err(Error::VariantMismatch(format!(
                        "untied params sized for {} bins, axis needs {}",
                        skews.len(),
                        k
                    )));
                }
                PreparedKind::Untied {
                    bases: skews.iter().map(|s| basis_from_params(s).u).collect(),
                    gains: interpolate_gains(gains, k, GainMode::Positive).lambda,
                }
            }
            AxisCoreParams::Complex { skew, magnitude, phase, .. } => {
                let mut ph = interpolate_gains(phase, k, GainMode::Signed).lambda;
                for &bin in &pinned_bins(axis_len) {
                    for ch in 0..c {
                        ph.set(bin, ch, 0.0);
                    }
                }
                PreparedKind::Complex {
                    basis: basis_from_params(skew).u,
                    magnitude: interpolate_gains(magnitude, k, GainMode::Positive).lambda,
                    phase: ph,
                }
            }
        };
        Ok(PreparedAxisOp { axis: self.axis(), axis_len, k_bins: k, channels: c, kind })
    }
}

/// Axis operator resolved against a concrete axis length: bases built,
/// gain tables interpolated to the retained bins, phases pinned.
#[derive(Debug, Clone)]
pub struct PreparedAxisOp {
    pub axis: Axis,
    pub axis_len: usize,
    pub k_bins: usize,
    pub channels: usize,
    pub kind: PreparedKind,
}

#[derive(Debug, Clone)]
pub enum PreparedKind {
    /// `None` basis means the identity basis (rotation skipped).
    Real { basis: Option<Mat>, gains: Mat },
    Untied { bases: Vec<Mat>, gains: Mat },
    Complex { basis: Mat, magnitude: Mat, phase: Mat },
}

/// Indices of self-mirrored bins whose phase must stay zero: DC always,
/// Nyquist when the axis length is even.
pub fn pinned_bins(axis_len: usize) -> Vec<usize> {
    let k = retained_bins(axis_len);
    if axis_len % 2 == 0 && k > 1 {
        vec![0, k - 1]
    } else {
        vec![0]
    }
}

/// Rotate one coefficient vector into basis coordinates: `t = U^T v`.
#[inline]
pub(crate) fn rotate_t(u: &Mat, v: &[Complex64], t: &mut [Complex64]) {
    let c = u.rows;
    for i in 0..c {
        let mut re = 0.0;
        let mut im = 0.0;
        for j in 0..c {
            let uji = u.at(j, i);
            re += uji * v[j].re;
            im += uji * v[j].im;
        }
        t[i] = Complex64::new(re, im);
    }
}

/// Rotate back: `out = U s`.
#[inline]
pub(crate) fn rotate_back(u: &Mat, s: &[Complex64], out: &mut [Complex64]) {
    let c = u.rows;
    for i in 0..c {
        let mut re = 0.0;
        let mut im = 0.0;
        for j in 0..c {
            let uij = u.at(i, j);
            re += uij * s[j].re;
            im += uij * s[j].im;
        }
        out[i] = Complex64::new(re, im);
    }
}

/// Apply the prepared operator to every (bin, position) coefficient vector
/// of `spec`, in place. When `save_t` is given, the basis-coordinate
/// vectors `t = U^T v` are recorded per (k, o, c) for the backward pass
/// (for the identity basis `t = v`).
pub fn apply_prepared(
    op: &PreparedAxisOp,
    spec: &mut crate::tensor::HalfSpectrum,
    mut save_t: Option<&mut Vec<Complex64>>,
) {
    assert_eq!(spec.retained, op.k_bins, "prepared op/spectrum bin mismatch");
    assert_eq!(spec.c, op.channels, "prepared op/spectrum channel mismatch");
    let c = op.channels;
    let mut t = vec![Complex64::new(0.0, 0.0); c];
    let mut out = vec![Complex64::new(0.0, 0.0); c];
    if let Some(buf) = save_t.as_deref_mut() {
        buf.clear();
        buf.reserve(op.k_bins * spec.other * c);
    }
    for k in 0..op.k_bins {
        for o in 0..spec.other {
            let line = spec.line_mut(k, o);
            match &op.kind {
                PreparedKind::Real { basis, gains } => {
                    let lam = &gains.data[k * c..(k + 1) * c];
                    match basis {
                        Some(u) => {
                            rotate_t(u, line, &mut t);
                            if let Some(buf) = save_t.as_deref_mut() {
                                buf.extend_from_slice(&t);
                            }
                            for (ti, l) in t.iter_mut().zip(lam) {
                                *ti = Complex64::new(ti.re * l, ti.im * l);
                            }
                            rotate_back(u, &t, &mut out);
                            line.copy_from_slice(&out);
                        }
                        None => {
                            if let Some(buf) = save_t.as_deref_mut() {
                                buf.extend_from_slice(line);
                            }
                            for (v, l) in line.iter_mut().zip(lam) {
                                *v = Complex64::new(v.re * l, v.im * l);
                            }
                        }
                    }
                }
                PreparedKind::Untied { bases, gains } => {
                    let u = &bases[k];
                    let lam = &gains.data[k * c..(k + 1) * c];
                    rotate_t(u, line, &mut t);
                    if let Some(buf) = save_t.as_deref_mut() {
                        buf.extend_from_slice(&t);
                    }
                    for (ti, l) in t.iter_mut().zip(lam) {
                        *ti = Complex64::new(ti.re * l, ti.im * l);
                    }
                    rotate_back(u, &t, &mut out);
                    line.copy_from_slice(&out);
                }
                PreparedKind::Complex { basis, magnitude, phase } => {
                    rotate_t(basis, line, &mut t);
                    if let Some(buf) = save_t.as_deref_mut() {
                        buf.extend_from_slice(&t);
                    }
                    for (ch, ti) in t.iter_mut().enumerate() {
                        let m = magnitude.at(k, ch);
                        let p = phase.at(k, ch);
                        let g = Complex64::new(m * p.cos(), m * p.sin());
                        *ti = g * *ti;
                    }
                    rotate_back(basis, &t, &mut out);
                    line.copy_from_slice(&out);
                }
            }
        }
    }
}

/// One axis pass: rFFT along the axis, per-bin channel operator, inverse
/// rFFT. Output is real; the imaginary residue stays below 1e-9 (checked
/// under `--verify-fft`).
pub fn axis_pass(x: &FeatureMap, params: &AxisCoreParams, variant: Variant) -> Result<FeatureMap> {
    let axis = params.axis();
    let n = x.axis_len(axis);
    let op = params.prepare(variant, n)?;
    let mut spec = rfft_axis(x, axis);
    apply_prepared(&op, &mut spec, None);
    irfft_axis(&spec, n)
}

/// Depthwise 3x3 kernel (one per channel) plus bias, followed by exact
/// erf-based GELU.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineParams {
    /// `C * 9` values, layout `[c][kh][kw]`.
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
}

impl RefineParams {
    /// Identity convolution: center tap one, everything else zero.
    pub fn identity_init(channels: usize) -> Self {
        let mut kernel = vec![0.0; channels * 9];
        for c in 0..channels {
            kernel[c * 9 + 4] = 1.0;
        }
        RefineParams { kernel, bias: vec![0.0; channels] }
    }

    pub fn channels(&self) -> usize {
        self.bias.len()
    }

    pub fn param_count(&self) -> usize {
        self.kernel.len() + self.bias.len()
    }
}

/// 1x1 fusion projection: C x C weight plus bias. No channel expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct FuseParams {
    /// `C x C`, row = output channel.
    pub weight: Mat,
    pub bias: Vec<f64>,
}

impl FuseParams {
    /// Zero weights and bias: the residual branch vanishes and the block
    /// is an exact identity.
    pub fn zero_init(channels: usize) -> Self {
        FuseParams { weight: Mat::zeros(channels, channels), bias: vec![0.0; channels] }
    }

    pub fn param_count(&self) -> usize {
        self.weight.data.len() + self.bias.len()
    }
}

/// Exact GELU: `0.5 x (1 + erf(x / sqrt(2)))`.
#[inline]
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// GELU derivative: `Phi(x) + x phi(x)` with the standard normal CDF/PDF.
#[inline]
pub fn gelu_prime(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2));
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    cdf + x * pdf
}

/// Depthwise 3x3 convolution with zero padding 1, bias add. No activation.
pub fn depthwise_conv3x3(x: &FeatureMap, p: &RefineParams) -> FeatureMap {
    assert_eq!(x.c, p.channels(), "refine channel mismatch");
    let mut out = FeatureMap::zeros(x.h, x.w, x.c);
    for h in 0..x.h {
        for w in 0..x.w {
            for c in 0..x.c {
                let mut acc = p.bias[c];
                for kh in 0..3usize {
                    let ih = h as isize + kh as isize - 1;
                    if ih < 0 || ih >= x.h as isize {
                        continue;
                    }
                    for kw in 0..3usize {
                        let iw = w as isize + kw as isize - 1;
                        if iw < 0 || iw >= x.w as isize {
                            continue;
                        }
                        acc += p.kernel[c * 9 + kh * 3 + kw]
                            * x.get(ih as usize, iw as usize, c);
                    }
                }
                out.set(h, w, c, acc);
            }
        }
    }
    out
}

/// Local refinement: depthwise 3x3 convolution then exact GELU.
pub fn local_refine(x: &FeatureMap, p: &RefineParams) -> FeatureMap {
    let mut out = depthwise_conv3x3(x, p);
    for v in &mut out.data {
        *v = gelu(*v);
    }
    out
}

/// Per-position linear map (1x1 convolution): `out = W x + b` at every
/// spatial location. `W` is `out_channels x in_channels`.
pub fn pointwise_conv(x: &FeatureMap, weight: &Mat, bias: &[f64]) -> FeatureMap {
    let cin = x.c;
    let cout = weight.rows;
    assert_eq!(weight.cols, cin, "pointwise channel mismatch");
    assert_eq!(bias.len(), cout);
    let mut out = FeatureMap::zeros(x.h, x.w, cout);
    for h in 0..x.h {
        for w in 0..x.w {
            let xin = &x.data[x.idx(h, w, 0)..x.idx(h, w, 0) + cin];
            let obase = out.idx(h, w, 0);
            for o in 0..cout {
                let row = &weight.data[o * cin..(o + 1) * cin];
                let mut acc = bias[o];
                for (wv, xv) in row.iter().zip(xin) {
                    acc += wv * xv;
                }
                out.data[obase + o] = acc;
            }
        }
    }
    out
}

/// 1x1 fusion: per-position `C -> C` linear map plus bias.
pub fn fuse(x: &FeatureMap, p: &FuseParams) -> FeatureMap {
    assert_eq!(p.weight.rows, x.c, "fuse channel mismatch");
    pointwise_conv(x, &p.weight, &p.bias)
}

/// The full trainable mixer block.
#[derive(Debug, Clone, PartialEq)]
pub struct MixerParams {
    pub variant: Variant,
    pub axis_mode: AxisMode,
    pub ch: AxisCoreParams,
    pub cw: AxisCoreParams,
    pub refine: RefineParams,
    pub fuse: FuseParams,
}

impl MixerParams {
    /// Block-identity initialization: spectral core is the identity map,
    /// refine is the identity convolution, fuse is zero, so
    /// `mixer_forward(x) == x` exactly.
    pub fn identity_init(
        variant: Variant,
        axis_mode: AxisMode,
        channels: usize,
        bins_h: usize,
        bins_w: usize,
        h: usize,
        w: usize,
    ) -> Self {
        MixerParams {
            variant,
            axis_mode,
            ch: AxisCoreParams::identity_init(variant, Axis::Height, channels, bins_h, h),
            cw: AxisCoreParams::identity_init(variant, Axis::Width, channels, bins_w, w),
            refine: RefineParams::identity_init(channels),
            fuse: FuseParams::zero_init(channels),
        }
    }

    pub fn channels(&self) -> usize {
        self.ch.channels()
    }

    /// Spectral-core parameter count (both axes, no wrapper).
    pub fn core_param_count(&self) -> usize {
        self.ch.param_count() + self.cw.param_count()
    }

    pub fn wrapper_param_count(&self) -> usize {
        self.refine.param_count() + self.fuse.param_count()
    }
}

/// Height-axis plane pass.
pub fn ch_plane_pass(x: &FeatureMap, p: &MixerParams) -> Result<FeatureMap> {
    assert_eq!(p.ch.axis(), Axis::Height, "CH params must be height-tagged");
    axis_pass(x, &p.ch, p.variant)
}

/// Width-axis plane pass.
pub fn cw_plane_pass(x: &FeatureMap, p: &MixerParams) -> Result<FeatureMap> {
    assert_eq!(p.cw.axis(), Axis::Width, "CW params must be width-tagged");
    axis_pass(x, &p.cw, p.variant)
}

/// The spectral core, dispatching on the axis composition. The parallel
/// combine sums the two pass outputs, so identity-initialized parameters
/// give `2x` in `ChPlusCw` mode.
pub fn spectral_core(x: &FeatureMap, p: &MixerParams) -> Result<FeatureMap> {
    match p.axis_mode {
        AxisMode::ChOnly => ch_plane_pass(x, p),
        AxisMode::CwOnly => cw_plane_pass(x, p),
        AxisMode::ChThenCw => cw_plane_pass(&ch_plane_pass(x, p)?, p),
        AxisMode::CwThenCh => ch_plane_pass(&cw_plane_pass(x, p)?, p),
        AxisMode::ChPlusCw => Ok(ch_plane_pass(x, p)?.add(&cw_plane_pass(x, p)?)),
    }
}

/// Full mixer block: `y = x + fuse(refine(core(x)))`.
pub fn mixer_forward(x: &FeatureMap, p: &MixerParams) -> Result<FeatureMap> {
    let core = spectral_core(x, p)?;
    let refined = local_refine(&core, &p.refine);
    let fused = fuse(&refined, &p.fuse);
    Ok(x.add(&fused))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    pub(crate) fn random_map(h: usize, w: usize, c: usize, seed: u64) -> FeatureMap {
        let mut rng = SeededRng::new(seed);
        let data = (0..h * w * c).map(|_| rng.uniform(-1.0, 1.0)).collect();
        FeatureMap::from_vec(data, h, w, c).unwrap()
    }

    pub(crate) fn random_mixer(
        variant: Variant,
        axis_mode: AxisMode,
        channels: usize,
        bins: usize,
        h: usize,
        w: usize,
        seed: u64,
    ) -> MixerParams {
        let mut p = MixerParams::identity_init(variant, axis_mode, channels, bins, bins, h, w);
        let mut rng = SeededRng::new(seed);
        randomize_axis(&mut p.ch, &mut rng);
        randomize_axis(&mut p.cw, &mut rng);
        for v in &mut p.refine.kernel {
            *v = rng.uniform(-0.5, 0.5);
        }
        for v in &mut p.refine.bias {
            *v = rng.uniform(-0.2, 0.2);
        }
        for v in &mut p.fuse.weight.data {
            *v = rng.uniform(-0.5, 0.5);
        }
        for v in &mut p.fuse.bias {
            *v = rng.uniform(-0.2, 0.2);
        }
        p
    }

    pub(crate) fn randomize_axis(a: &mut AxisCoreParams, rng: &mut SeededRng) {
        match a {
            AxisCoreParams::Shared { skew, gains, .. } => {
                for t in &mut skew.theta {
                    *t = rng.uniform(-0.8, 0.8);
                }
                for g in &mut gains.gamma.data {
                    *g = rng.uniform(-1.0, 1.5);
                }
            }
            AxisCoreParams::Identity { gains, .. } => {
                for g in &mut gains.gamma.data {
                    *g = rng.uniform(-1.0, 1.5);
                }
            }
            AxisCoreParams::Untied { skews, gains, .. } => {
                for s in skews {
                    for t in &mut s.theta {
                        *t = rng.uniform(-0.8, 0.8);
                    }
                }
                for g in &mut gains.gamma.data {
                    *g = rng.uniform(-1.0, 1.5);
                }
            }
            AxisCoreParams::Complex { skew, magnitude, phase, .. } => {
                for t in &mut skew.theta {
                    *t = rng.uniform(-0.8, 0.8);
                }
                for g in &mut magnitude.gamma.data {
                    *g = rng.uniform(-1.0, 1.5);
                }
                for g in &mut phase.gamma.data {
                    *g = rng.uniform(-1.0, 1.0);
                }
            }
        }
    }

    #[test]
    fn plane_passes_are_identity_at_init() {
        let x = random_map(5, 6, 3, 1);
        let p = MixerParams::identity_init(Variant::Chasm, AxisMode::ChThenCw, 3, 4, 4, 5, 6);
        let ych = ch_plane_pass(&x, &p).unwrap();
        assert!(x.max_abs_diff(&ych) < 1e-10);
        let ycw = cw_plane_pass(&x, &p).unwrap();
        assert!(x.max_abs_diff(&ycw) < 1e-10);
    }

    #[test]
    fn h1_input_reduces_to_dc_operator() {
        // H = 1: only the DC bin exists, so the CH pass applies M(0) to
        // every (width, channel) line directly.
        let c = 3;
        let x = random_map(1, 4, c, 2);
        let mut p = MixerParams::identity_init(Variant::Chasm, AxisMode::ChOnly, c, 2, 2, 1, 4);
        let mut rng = SeededRng::new(3);
        randomize_axis(&mut p.ch, &mut rng);
        let y = ch_plane_pass(&x, &p).unwrap();

        let op = p.ch.prepare(Variant::Chasm, 1).unwrap();
        let (u, lam) = match &op.kind {
            PreparedKind::Real { basis: Some(u), gains } => (u.clone(), gains.clone()),
            _ => unreachable!(),
        };
        let m = crate::operator::dense_operator(&u, &lam.data[0..c]);
        for w in 0..4 {
            let vin: Vec<f64> = (0..c).map(|ch| x.get(0, w, ch)).collect();
            let vout = m.matvec(&vin);
            for ch in 0..c {
                assert!((y.get(0, w, ch) - vout[ch]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spectral_core_identity_at_init_all_modes() {
        let x = random_map(4, 6, 3, 5);
        for mode in AxisMode::ALL {
            for variant in Variant::ALL {
                let p = MixerParams::identity_init(variant, mode, 3, 3, 3, 4, 6);
                let y = spectral_core(&x, &p).unwrap();
                if mode == AxisMode::ChPlusCw {
                    let two_x = x.lincomb(2.0, &x, 0.0);
                    assert!(
                        y.max_abs_diff(&two_x) < 1e-10,
                        "{} {}",
                        variant.name(),
                        mode.name()
                    );
                } else {
                    assert!(
                        y.max_abs_diff(&x) < 1e-10,
                        "{} {}",
                        variant.name(),
                        mode.name()
                    );
                }
            }
        }
    }

    #[test]
    fn composition_order_matters_for_generic_params() {
        let x = random_map(4, 4, 3, 6);
        let a = random_mixer(Variant::Chasm, AxisMode::ChThenCw, 3, 3, 4, 4, 7);
        let mut b = a.clone();
        b.axis_mode = AxisMode::CwThenCh;
        let ya = spectral_core(&x, &a).unwrap();
        let yb = spectral_core(&x, &b).unwrap();
        assert!(ya.max_abs_diff(&yb) > 1e-6);
    }

    #[test]
    fn spectral_core_is_linear() {
        let x = random_map(4, 5, 3, 8);
        let y = random_map(4, 5, 3, 9);
        let (a, b) = (1.3, -0.7);
        for variant in Variant::ALL {
            let p = random_mixer(variant, AxisMode::ChThenCw, 3, 3, 4, 5, 10);
            let lhs = spectral_core(&x.lincomb(a, &y, b), &p).unwrap();
            let rhs = spectral_core(&x, &p)
                .unwrap()
                .lincomb(a, &spectral_core(&y, &p).unwrap(), b);
            assert!(lhs.max_abs_diff(&rhs) < 1e-10, "{}", variant.name());
        }
    }

    #[test]
    fn realness_residue_below_tolerance_all_variants() {
        crate::set_fft_verify(true);
        let x = random_map(6, 8, 4, 11);
        for variant in Variant::ALL {
            for mode in AxisMode::ALL {
                let p = random_mixer(variant, mode, 4, 3, 6, 8, 12);
                // irfft_axis errors if the residue exceeds 1e-9 relative
                let y = spectral_core(&x, &p);
                assert!(y.is_ok(), "{} {}", variant.name(), mode.name());
            }
        }
        crate::set_fft_verify(false);
    }

    #[test]
    fn refine_identity_kernel_is_elementwise_gelu() {
        let x = random_map(3, 4, 2, 13);
        let p = RefineParams::identity_init(2);
        let y = local_refine(&x, &p);
        for (a, b) in y.data.iter().zip(&x.data) {
            assert!((a - gelu(*b)).abs() < 1e-15);
        }
    }

    #[test]
    fn gelu_asymptotics() {
        assert_eq!(gelu(0.0), 0.0);
        assert!((gelu(8.0) - 8.0).abs() < 1e-12);
        assert!(gelu(-8.0).abs() < 1e-12);
    }

    #[test]
    fn conv_1x1_spatial_input_uses_only_center_tap() {
        let x = random_map(1, 1, 3, 14);
        let mut p = RefineParams::identity_init(3);
        let mut rng = SeededRng::new(15);
        for v in &mut p.kernel {
            *v = rng.uniform(-1.0, 1.0);
        }
        for v in &mut p.bias {
            *v = rng.uniform(-1.0, 1.0);
        }
        let y = depthwise_conv3x3(&x, &p);
        for c in 0..3 {
            let expect = p.kernel[c * 9 + 4] * x.get(0, 0, c) + p.bias[c];
            assert!((y.get(0, 0, c) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn fuse_identity_and_zero_weights() {
        let x = random_map(3, 3, 4, 16);
        let mut ident = FuseParams::zero_init(4);
        for i in 0..4 {
            ident.weight.set(i, i, 1.0);
        }
        assert!(fuse(&x, &ident).max_abs_diff(&x) < 1e-15);

        let mut biased = FuseParams::zero_init(4);
        biased.bias = vec![0.5, -0.25, 0.0, 2.0];
        let y = fuse(&x, &biased);
        for h in 0..3 {
            for w in 0..3 {
                for c in 0..4 {
                    assert_eq!(y.get(h, w, c), biased.bias[c]);
                }
            }
        }
    }

    #[test]
    fn fuse_matches_bruteforce_loop() {
        let x = random_map(4, 3, 3, 17);
        let mut p = FuseParams::zero_init(3);
        let mut rng = SeededRng::new(18);
        for v in &mut p.weight.data {
            *v = rng.uniform(-1.0, 1.0);
        }
        for v in &mut p.bias {
            *v = rng.uniform(-1.0, 1.0);
        }
        let y = fuse(&x, &p);
        for h in 0..4 {
            for w in 0..3 {
                for o in 0..3 {
                    let mut acc = p.bias[o];
                    for i in 0..3 {
                        acc += p.weight.at(o, i) * x.get(h, w, i);
                    }
                    assert!((y.get(h, w, o) - acc).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn mixer_with_zero_fuse_is_exact_identity() {
        let x = random_map(5, 4, 3, 19);
        let mut p = random_mixer(Variant::Chasm, AxisMode::ChThenCw, 3, 3, 5, 4, 20);
        p.fuse = FuseParams::zero_init(3);
        let y = mixer_forward(&x, &p).unwrap();
        assert_eq!(x.data, y.data);
    }

    #[test]
    fn mixer_init_core_reduces_to_residual_gelu_branch() {
        let x = random_map(4, 4, 2, 21);
        let mut p = MixerParams::identity_init(Variant::Chasm, AxisMode::ChThenCw, 2, 3, 3, 4, 4);
        let mut rng = SeededRng::new(22);
        for v in &mut p.fuse.weight.data {
            *v = rng.uniform(-0.7, 0.7);
        }
        for v in &mut p.fuse.bias {
            *v = rng.uniform(-0.3, 0.3);
        }
        let y = mixer_forward(&x, &p).unwrap();
        // core is identity, refine kernel is the identity conv:
        // y = x + fuse(gelu(x))
        let mut gx = x.clone();
        for v in &mut gx.data {
            *v = gelu(*v);
        }
        let expect = x.add(&fuse(&gx, &p.fuse));
        assert!(y.max_abs_diff(&expect) < 1e-10);
    }

    #[test]
    fn untied_with_equal_thetas_matches_shared_basis() {
        let c = 3;
        let (h, w) = (6, 5);
        let x = random_map(h, w, c, 23);
        let mut rng = SeededRng::new(24);
        let theta: Vec<f64> = (0..c * (c - 1) / 2).map(|_| rng.uniform(-0.8, 0.8)).collect();

        // shared-basis CHASM with a direct (B = K) table
        let kh = retained_bins(h);
        let kw = retained_bins(w);
        let mut shared =
            MixerParams::identity_init(Variant::Chasm, AxisMode::ChThenCw, c, kh, kw, h, w);
        if let AxisCoreParams::Shared { skew, gains, .. } = &mut shared.ch {
            skew.theta = theta.clone();
            for g in &mut gains.gamma.data {
                *g = rng.uniform(-0.5, 1.0);
            }
        }
        if let AxisCoreParams::Shared { skew, gains, .. } = &mut shared.cw {
            skew.theta = theta.clone();
            for g in &mut gains.gamma.data {
                *g = rng.uniform(-0.5, 1.0);
            }
        }

        // untied with every per-bin theta equal and the same direct table
        let mut untied =
            MixerParams::identity_init(Variant::UntiedBasis, AxisMode::ChThenCw, c, kh, kw, h, w);
        for (axis_u, axis_s) in [(&mut untied.ch, &shared.ch), (&mut untied.cw, &shared.cw)] {
            if let (
                AxisCoreParams::Untied { skews, gains, .. },
                AxisCoreParams::Shared { skew: s_skew, gains: s_gains, .. },
            ) = (axis_u, axis_s)
            {
                for sk in skews.iter_mut() {
                    sk.theta = s_skew.theta.clone();
                }
                gains.gamma = s_gains.gamma.clone();
            }
        }

        let ys = spectral_core(&x, &shared).unwrap();
        let yu = spectral_core(&x, &untied).unwrap();
        assert!(ys.max_abs_diff(&yu) < 1e-10);
    }

    #[test]
    fn complex_gain_with_zero_phase_equals_positive_chasm() {
        let c = 3;
        let (h, w) = (4, 6);
        let x = random_map(h, w, c, 25);
        let mut chasm = MixerParams::identity_init(Variant::Chasm, AxisMode::ChThenCw, c, 3, 3, h, w);
        let mut rng = SeededRng::new(26);
        randomize_axis(&mut chasm.ch, &mut rng);
        randomize_axis(&mut chasm.cw, &mut rng);

        let mut cplx =
            MixerParams::identity_init(Variant::ComplexGain, AxisMode::ChThenCw, c, 3, 3, h, w);
        for (dst, src) in [(&mut cplx.ch, &chasm.ch), (&mut cplx.cw, &chasm.cw)] {
            if let (
                AxisCoreParams::Complex { skew, magnitude, phase, .. },
                AxisCoreParams::Shared { skew: s_skew, gains, .. },
            ) = (dst, src)
            {
                skew.theta = s_skew.theta.clone();
                magnitude.gamma = gains.gamma.clone();
                for v in &mut phase.gamma.data {
                    *v = 0.0;
                }
            }
        }

        let ya = spectral_core(&x, &chasm).unwrap();
        let yb = spectral_core(&x, &cplx).unwrap();
        // phase zero reduces the complex multiply to the real one exactly
        assert_eq!(ya.data, yb.data);
    }

    #[test]
    fn identity_basis_with_unit_gains_is_identity_map() {
        let x = random_map(5, 5, 3, 27);
        let p =
            MixerParams::identity_init(Variant::IdentityBasis, AxisMode::ChThenCw, 3, 4, 4, 5, 5);
        let y = spectral_core(&x, &p).unwrap();
        assert!(y.max_abs_diff(&x) < 1e-10);
    }

    #[test]
    fn axis_params_are_independent() {
        // mutating one axis's parameters leaves the other pass unchanged
        let x = random_map(4, 4, 3, 28);
        let a = random_mixer(Variant::Chasm, AxisMode::ChThenCw, 3, 3, 4, 4, 29);
        let mut b = a.clone();
        if let AxisCoreParams::Shared { skew, .. } = &mut b.cw {
            skew.theta[0] += 0.5;
        }
        let ch_a = ch_plane_pass(&x, &a).unwrap();
        let ch_b = ch_plane_pass(&x, &b).unwrap();
        assert_eq!(ch_a.data, ch_b.data);
        let cw_a = cw_plane_pass(&x, &a).unwrap();
        let cw_b = cw_plane_pass(&x, &b).unwrap();
        assert!(cw_a.max_abs_diff(&cw_b) > 1e-6);
    }

    #[test]
    fn core_param_count_formula() {
        // two-axis core: C(C-1) + (B_H + B_W) C
        for (c, bh, bw) in [(2usize, 3usize, 3usize), (4, 3, 3), (8, 9, 5)] {
            let p = MixerParams::identity_init(Variant::Chasm, AxisMode::ChThenCw, c, bh, bw, 8, 8);
            assert_eq!(p.core_param_count(), c * (c - 1) + (bh + bw) * c);
        }
        // the worked instance: C=4, B_H=B_W=3 -> 12 + 24 = 36
        let p = MixerParams::identity_init(Variant::Chasm, AxisMode::ChThenCw, 4, 3, 3, 8, 8);
        assert_eq!(p.core_param_count(), 36);
    }

    #[test]
    fn variant_mismatch_is_rejected() {
        let p = MixerParams::identity_init(Variant::Chasm, AxisMode::ChThenCw, 3, 3, 3, 4, 4);
        assert!(matches!(
            p.ch.prepare(Variant::UntiedBasis, 4),
            Err(Error::VariantMismatch(_))
        ));
    }

    #[test]
    fn untied_bin_count_must_match_axis() {
        let p = AxisCoreParams::identity_init(Variant::UntiedBasis, Axis::Height, 3, 3, 8);
        // sized for length 8 (K = 5); axis length 6 needs K = 4
        assert!(matches!(
            p.prepare(Variant::UntiedBasis, 6),
            Err(Error::VariantMismatch(_))
        ));
    }
}
