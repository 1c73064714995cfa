//! Monte Carlo and spectral checks of the encoder's statistical guarantees.
//!
//! Three claims are machine-checkable and guarded here:
//!
//! * the expected normalized similarity of two encodings factorizes as
//!   S(x, y) = Π_i K(x(i), y(i)), with variance at most (2γ/N²)(1 − S)
//!   where γ is the permutation family's interference constant;
//! * the sign-space lift exp(−λ|i−j|^β) stays positive semidefinite for
//!   β ≤ 2 and fails beyond (minimal-eigenvalue scan over β);
//! * torus permutations commute with image translation: exactly for the
//!   block family, and exactly on wrap-free shifts for the cyclic family
//!   once both sides are referenced to a constant frame encoding.
//!
//! Everything is deterministic given the master seed: Monte Carlo trial t
//! redraws hypervectors from seed mix(seed, t), so results are independent
//! of scheduling and repeatable bit-for-bit.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::encoder::{encode, similarity, EncodeError, EncoderConfig, PackedHypervector};
use crate::hypervectors::{generate_hypervectors, HypervectorError};
use crate::kernel::KernelMatrix;
use crate::numerics::{sym_eigen, DenseMatrix, NumericsError};
use crate::permutations::{gamma, PermutationError, PermutationFamily};
use crate::rng::mix;

/// Largest alphabet the spectral scan will eigendecompose.
const SCAN_MAX_ALPHABET: usize = 256;

/// Relative threshold handed to the symmetric eigensolver.
const EIGEN_TOL: f64 = 1e-12;

/// Monte Carlo estimate of the normalized similarity ψ_xᵀψ_y/N against its
/// predicted mean and variance bound.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityEstimate {
    pub mean: f64,
    /// Unbiased sample variance over the trials.
    pub variance: f64,
    pub trials: usize,
    /// Π_i K(x(i), y(i)).
    pub predicted: f64,
    /// (2γ/N²)·(1 − predicted).
    pub variance_bound: f64,
}

/// Outcome of one translation-commutation probe.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftCheck {
    pub di: usize,
    pub dj: usize,
    pub exact: bool,
    /// Fraction of the N positions where the two sides disagree.
    pub mismatch_fraction: f64,
    /// Cyclic family only: content positions whose image shift wraps around
    /// the image boundary (the torus does not wrap there, so those bound
    /// factors differ). Always 0 for the block family.
    pub wrapped_bindings: usize,
}

/// One line of a machine-readable verification report.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    /// Short comma-free label.
    pub criterion: String,
    pub predicted: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum VerifyError {
    TooFewTrials { trials: usize },
    PointShape { x_len: usize, y_len: usize, d: usize },
    ValueOutOfRange { value: u16, m: usize },
    AlphabetTooLarge { m: usize },
    NotTwoDimensional,
    Hypervectors(HypervectorError),
    Encode(EncodeError),
    Numerics(NumericsError),
    Permutation(PermutationError),
}

impl core::fmt::Display for VerifyError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            VerifyError::TooFewTrials { trials } => {
                write!(f, "{trials} trials: variance estimation needs at least 30")
            }
            VerifyError::PointShape { x_len, y_len, d } => {
                write!(f, "points of lengths {x_len} and {y_len} for a family binding {d} features")
            }
            VerifyError::ValueOutOfRange { value, m } => {
                write!(f, "value {value} outside alphabet 1..={m}")
            }
            VerifyError::AlphabetTooLarge { m } => {
                write!(f, "alphabet {m} exceeds the scan cap {SCAN_MAX_ALPHABET}")
            }
            VerifyError::NotTwoDimensional => {
                write!(f, "translation check needs a two-dimensional permutation family")
            }
            VerifyError::Hypervectors(e) => write!(f, "{e}"),
            VerifyError::Encode(e) => write!(f, "{e}"),
            VerifyError::Numerics(e) => write!(f, "{e}"),
            VerifyError::Permutation(e) => write!(f, "{e}"),
        }
    }
}

impl From<HypervectorError> for VerifyError {
    fn from(e: HypervectorError) -> Self {
        VerifyError::Hypervectors(e)
    }
}

impl From<EncodeError> for VerifyError {
    fn from(e: EncodeError) -> Self {
        VerifyError::Encode(e)
    }
}

impl From<NumericsError> for VerifyError {
    fn from(e: NumericsError) -> Self {
        VerifyError::Numerics(e)
    }
}

impl From<PermutationError> for VerifyError {
    fn from(e: PermutationError) -> Self {
        VerifyError::Permutation(e)
    }
}

/// Predicted similarity Π_i K(x(i), y(i)).
///
/// Callers must supply points of equal length with values in {1..m}.
pub fn theory_similarity(x: &[u16], y: &[u16], km: &KernelMatrix) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(&a, &b)| km.affinity(a, b)).product()
}

fn check_point(p: &[u16], m: usize) -> Result<(), VerifyError> {
    for &v in p {
        if v == 0 || v as usize > m {
            return Err(VerifyError::ValueOutOfRange { value: v, m });
        }
    }
    Ok(())
}

/// Redraw hypervectors `trials` times (trial t from seed mix(seed, t)),
/// encode x and y with each set, and compare the sample statistics of
/// ψ_xᵀψ_y/N with the predicted mean and variance bound.
pub fn mc_similarity(
    x: &[u16],
    y: &[u16],
    km: &KernelMatrix,
    family: &PermutationFamily,
    trials: usize,
    seed: u64,
) -> Result<SimilarityEstimate, VerifyError> {
    if trials < 30 {
        return Err(VerifyError::TooFewTrials { trials });
    }
    let d = family.d();
    if x.len() != d || y.len() != d {
        return Err(VerifyError::PointShape { x_len: x.len(), y_len: y.len(), d });
    }
    let m = km.spec.m;
    check_point(x, m)?;
    check_point(y, m)?;

    let n = family.n();
    let mut samples = Vec::with_capacity(trials);
    for t in 0..trials {
        let hv = generate_hypervectors(km, n, mix(seed, t as u64))?;
        let cfg = EncoderConfig::new(hv, family.clone())?;
        let psi_x = encode(&cfg, x)?;
        let psi_y = encode(&cfg, y)?;
        let s = similarity(&psi_x, &psi_y)?;
        samples.push(s as f64 / n as f64);
    }

    let mean = samples.iter().sum::<f64>() / trials as f64;
    let variance =
        samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (trials as f64 - 1.0);
    let predicted = theory_similarity(x, y, km);
    let variance_bound = 2.0 * gamma(family) as f64 / (n as f64 * n as f64) * (1.0 - predicted);
    Ok(SimilarityEstimate { mean, variance, trials, predicted, variance_bound })
}

/// Minimal eigenvalue of exp(−λ|i−j|^β) on an m-point grid, for each β.
///
/// The profile is positive semidefinite exactly for β ∈ (0, 2]; the scan
/// exposes both sides of that threshold.
pub fn schoenberg_scan(
    beta_values: &[f64],
    m: usize,
    lambda: f64,
) -> Result<Vec<(f64, f64)>, VerifyError> {
    if m == 0 || m > SCAN_MAX_ALPHABET {
        return Err(VerifyError::AlphabetTooLarge { m });
    }
    let mut out = Vec::with_capacity(beta_values.len());
    for &beta in beta_values {
        let mut w = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let r = if i > j { i - j } else { j - i } as f64;
                w.set(i, j, libm::exp(-lambda * libm::pow(r, beta)));
            }
        }
        let eig = sym_eigen(&w, EIGEN_TOL)?;
        let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
        out.push((beta, min));
    }
    Ok(out)
}

// Cyclic image shift: content at (i, j) moves to ((i+a) mod L, (j+b) mod L).
fn shift_image(image: &[u16], side: usize, a: usize, b: usize) -> Vec<u16> {
    let mut out = vec![0u16; image.len()];
    for i in 0..side {
        for j in 0..side {
            out[((i + a) % side) * side + ((j + b) % side)] = image[i * side + j];
        }
    }
    out
}

/// Probe T_{a,b} ψ_x = ψ_{S_{a,b} x} for a list of image shifts.
///
/// Block family: the comparison is raw and must be exact for every shift —
/// the permutation group is the image translation group itself. Cyclic
/// family: the image grid embeds in a larger torus, so both sides are
/// multiplied by the encoding of the constant frame image (value taken from
/// the image's corner pixel); factors at frame-valued positions cancel, and
/// the comparison is exact precisely when no content position wraps around
/// the image boundary under the shift. `wrapped_bindings` counts the
/// positions that do.
pub fn equivariance_check(
    cfg: &EncoderConfig,
    image: &[u16],
    shifts: &[(usize, usize)],
) -> Result<Vec<ShiftCheck>, VerifyError> {
    let family = cfg.family();
    let (side, cyclic) = match *family {
        PermutationFamily::Cyclic2d { image_side, .. } => (image_side, true),
        PermutationFamily::Block2d { image_side, .. } => (image_side, false),
        _ => return Err(VerifyError::NotTwoDimensional),
    };
    let d = side * side;
    if image.len() != d {
        return Err(VerifyError::PointShape { x_len: image.len(), y_len: d, d });
    }
    let n = cfg.n();

    let psi = encode(cfg, image)?;
    // Frame reference for the cyclic family; all-ones (no-op) otherwise.
    let frame_ref = if cyclic {
        let frame_image = vec![image[0]; d];
        encode(cfg, &frame_image)?
    } else {
        PackedHypervector::ones(n)
    };
    let phi = psi.bind(&frame_ref)?;

    let mut out = Vec::with_capacity(shifts.len());
    for &(di, dj) in shifts {
        let (a, b) = (di % side, dj % side);
        let shifted = shift_image(image, side, a, b);
        let target = encode(cfg, &shifted)?.bind(&frame_ref)?;
        let moved =
            PackedHypervector::from_signs(&family.apply(family.index_of_pair(a, b)?, &phi.to_signs())?);
        let sim = similarity(&target, &moved)?;
        let mismatch_fraction = (n as f64 - sim as f64) / (2.0 * n as f64);

        let wrapped_bindings = if cyclic {
            let frame = image[0];
            let mut wrapped = 0;
            for i in 0..side {
                for j in 0..side {
                    if image[i * side + j] != frame && (i + a >= side || j + b >= side) {
                        wrapped += 1;
                    }
                }
            }
            wrapped
        } else {
            0
        };
        out.push(ShiftCheck { di, dj, exact: sim == n as i64, mismatch_fraction, wrapped_bindings });
    }
    Ok(out)
}

/// Render report rows as CSV with a fixed header.
pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("criterion,predicted,observed,tolerance,pass\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.criterion, row.predicted, row.observed, row.tolerance, row.pass
        ));
    }
    out
}
