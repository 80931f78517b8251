//! CHASM: a cross-frequency harmonized axis-separable spectral mixer.
//!
//! The crate implements the full mixer stack end to end:
//!
//! * real FFTs along the height or width axis of an `H x W x C` feature map,
//!   with a naive-DFT reference path used as an oracle ([`fft`]),
//! * the harmonized spectral operator family: a shared orthogonal channel
//!   basis built from skew-symmetric coordinates through the matrix
//!   exponential, plus interpolated per-frequency gain tables ([`operator`]),
//! * the mixer block (axis passes, local refinement, fusion, residual) and
//!   its ablation variants ([`mixer`]),
//! * exact reverse-mode gradients for every forward operation, a finite
//!   difference verifier, and AdamW ([`grad`], [`optim`]),
//! * Cartesian MRI sampling simulation: phantoms, masks, forward/adjoint/
//!   normal operators, zero-filled reconstruction ([`mri`]),
//! * verification instruments: dense linear-map oracle, Jacobian-rank
//!   degrees-of-freedom check, small-matrix SVD, PSNR/SSIM ([`analysis`]),
//! * the toy reconstruction model and experiment runners ([`model`],
//!   [`train`], [`verify`]).
//!
//! All numerics are f64. Every operation is a pure function over immutable
//! inputs; training runs are deterministic given (config, seed).

pub mod analysis;
pub mod config;
pub mod fft;
pub mod grad;
pub mod io;
pub mod linalg;
pub mod mixer;
pub mod model;
pub mod mri;
pub mod operator;
pub mod optim;
pub mod rng;
pub mod tensor;
pub mod train;
pub mod verify;

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};

/// Library-wide flag: when set, inverse real FFTs assert that the imaginary
/// residue they discard is below tolerance, and fail loudly otherwise.
/// Surfaced on the CLI as `--verify-fft`.
static FFT_VERIFY: AtomicBool = AtomicBool::new(false);

/// Enable or disable the FFT conjugate-symmetry residue check.
pub fn set_fft_verify(on: bool) {
    FFT_VERIFY.store(on, Ordering::Relaxed);
}

/// Current state of the FFT residue check flag.
pub fn fft_verify_enabled() -> bool {
    FFT_VERIFY.load(Ordering::Relaxed)
}

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Tensor or parameter dimensions do not agree.
    ShapeMismatch(String),
    /// An inverse real FFT saw an imaginary residue above tolerance,
    /// which signals a conjugate-symmetry violation upstream.
    ImaginaryResidue { relative: f64, tolerance: f64 },
    /// A deliberately slow oracle was asked to run above its size cap.
    SizeCap { requested: usize, cap: usize },
    /// Non-finite value produced where finite math was required.
    NonFinite(String),
    /// Invalid configuration value or file.
    Config(String),
    /// Mixer variant does not match the supplied parameter layout.
    VariantMismatch(String),
    /// Training diverged (non-finite loss).
    Diverged { step: usize },
    /// Filesystem error while reading or writing run artifacts.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::ImaginaryResidue { relative, tolerance } => write!(
                f,
                "imaginary residue {relative:.3e} exceeds {tolerance:.3e}; \
                 conjugate symmetry violated upstream"
            ),
            Error::SizeCap { requested, cap } => {
                write!(f, "oracle size cap exceeded: {requested} > {cap}")
            }
            Error::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::VariantMismatch(msg) => write!(f, "variant/params mismatch: {msg}"),
            Error::Diverged { step } => write!(f, "training diverged at step {step}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
