//! Alphabet kernels: the affinity K on {1..m} and its sign-space lift W.
//!
//! `build_kernel` produces the admissible family
//!
//! ```text
//! K(i,j) = (2/π)·asin(exp(−(π²/8)·λ²·|i−j|^{2α})),   0 < α ≤ 1,
//! ```
//!
//! whose lift W(i,j) = sin(π/2·K(i,j)) = exp(−(π²/8)·λ²·|i−j|^{2α}) is
//! positive semidefinite for 2α ∈ (0,2] (Schoenberg), so sign-of-Gaussian
//! hypervectors with covariance W reproduce K exactly in expectation. For
//! small λ|i−j| the profile tracks the Laplace kernel: |K(i,j) −
//! exp(−λ|i−j|)| ≤ 2(λ|i−j|)² whenever λ|i−j| ≤ 0.1.
//!
//! [`ExponentConvention`] selects how λ enters the exponent. The default
//! `LambdaSquared` uses λ² and is the convention with the Laplace limit
//! above; `Lambda` keeps a bare λ for comparison runs.
//!
//! The bandwidth itself comes from data via the median heuristic,
//! λ = c / median(pairwise ‖·‖_α^α distances of sampled training vectors).

use alloc::vec::Vec;
use libm::{asin, exp, pow, sin};

use crate::numerics::{sym_eigen, DenseMatrix, NumericsError};
use crate::rng::SplitMix64;

const PI: f64 = core::f64::consts::PI;
/// Largest alphabet the dense kernel path is sized for.
pub const MAX_ALPHABET: usize = 4096;

/// How λ enters the exponent of the affinity profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExponentConvention {
    /// exp(−(π²/8)·λ²·r^{2α}) — Laplace limit K ≈ exp(−λr); the default.
    LambdaSquared,
    /// exp(−(π²/8)·λ·r^{2α}) — bare λ, kept for comparison runs.
    Lambda,
}

impl Default for ExponentConvention {
    fn default() -> Self {
        ExponentConvention::LambdaSquared
    }
}

/// Parameters of the affinity family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub alpha: f64,
    pub lambda: f64,
    /// Alphabet size: features take values in {1..m}.
    pub m: usize,
    pub convention: ExponentConvention,
}

impl KernelSpec {
    pub fn new(alpha: f64, lambda: f64, m: usize) -> Self {
        KernelSpec { alpha, lambda, m, convention: ExponentConvention::LambdaSquared }
    }
}

/// The affinity matrix K and its sign-space lift W = sin(π/2·K).
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub spec: KernelSpec,
    pub k: DenseMatrix,
    pub w: DenseMatrix,
}

impl KernelMatrix {
    /// Affinity between alphabet values i, j ∈ {1..m}.
    #[inline]
    pub fn affinity(&self, i: u16, j: u16) -> f64 {
        self.k.get(i as usize - 1, j as usize - 1)
    }
}

/// Result of the PSD check on a lifted kernel.
#[derive(Clone, Copy, Debug)]
pub struct Admissibility {
    pub admissible: bool,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum KernelError {
    BadAlpha { alpha: f64 },
    BadLambda { lambda: f64 },
    BadAlphabet { m: usize },
    BadAffinity { value: f64 },
    NotSquare,
    EmptySample,
    ShapeMismatch { len: usize, dim: usize },
    DegenerateSample,
    Numerics(NumericsError),
}

impl core::fmt::Display for KernelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            KernelError::BadAlpha { alpha } => write!(f, "alpha must be in (0, 1], got {alpha}"),
            KernelError::BadLambda { lambda } => {
                write!(f, "lambda must be positive and finite, got {lambda}")
            }
            KernelError::BadAlphabet { m } => {
                write!(f, "alphabet size must be in 1..={MAX_ALPHABET}, got {m}")
            }
            KernelError::BadAffinity { value } => {
                write!(f, "affinity entries must lie in [-1, 1], got {value}")
            }
            KernelError::NotSquare => write!(f, "affinity matrix must be square"),
            KernelError::EmptySample => write!(f, "bandwidth selection needs a nonempty sample"),
            KernelError::ShapeMismatch { len, dim } => {
                write!(f, "flat data length {len} is not a multiple of dimension {dim}")
            }
            KernelError::DegenerateSample => {
                write!(f, "median pairwise distance is zero; cannot set a bandwidth")
            }
            KernelError::Numerics(e) => write!(f, "{e}"),
        }
    }
}

impl From<NumericsError> for KernelError {
    fn from(e: NumericsError) -> Self {
        KernelError::Numerics(e)
    }
}

/// Build K and W = sin(π/2·K) for the affinity family with the given spec.
///
/// K is symmetric Toeplitz with unit diagonal and entries in (0, 1].
pub fn build_kernel(spec: &KernelSpec) -> Result<KernelMatrix, KernelError> {
    if !(spec.alpha > 0.0 && spec.alpha <= 1.0) {
        return Err(KernelError::BadAlpha { alpha: spec.alpha });
    }
    if !(spec.lambda > 0.0 && spec.lambda.is_finite()) {
        return Err(KernelError::BadLambda { lambda: spec.lambda });
    }
    if spec.m == 0 || spec.m > MAX_ALPHABET {
        return Err(KernelError::BadAlphabet { m: spec.m });
    }

    let lam_term = match spec.convention {
        ExponentConvention::LambdaSquared => spec.lambda * spec.lambda,
        ExponentConvention::Lambda => spec.lambda,
    };
    // Toeplitz profiles over r = |i−j|; r = 0 pinned to exact 1.
    let mut k_profile = Vec::with_capacity(spec.m);
    let mut w_profile = Vec::with_capacity(spec.m);
    k_profile.push(1.0);
    w_profile.push(1.0);
    for r in 1..spec.m {
        let e = exp(-(PI * PI / 8.0) * lam_term * pow(r as f64, 2.0 * spec.alpha));
        k_profile.push((2.0 / PI) * asin(e));
        w_profile.push(e);
    }

    let mut k = DenseMatrix::zeros(spec.m, spec.m);
    let mut w = DenseMatrix::zeros(spec.m, spec.m);
    for i in 0..spec.m {
        for j in 0..spec.m {
            let r = i.abs_diff(j);
            k.set(i, j, k_profile[r]);
            w.set(i, j, w_profile[r]);
        }
    }
    Ok(KernelMatrix { spec: *spec, k, w })
}

/// Check whether an affinity matrix K is admissible: lift it to
/// W = sin(π/2·K) and test W for positive semidefiniteness.
///
/// `admissible` is true iff the smallest eigenvalue of W is ≥ −tol.
pub fn check_admissible(k: &DenseMatrix, tol: f64) -> Result<Admissibility, KernelError> {
    if k.rows() != k.cols() {
        return Err(KernelError::NotSquare);
    }
    let m = k.rows();
    let mut w = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let v = k.get(i, j);
            if !((-1.0..=1.0).contains(&v)) {
                return Err(KernelError::BadAffinity { value: v });
            }
            w.set(i, j, sin(PI / 2.0 * v));
        }
    }
    let eig = sym_eigen(&w, 1e-12)?;
    let min_eigenvalue = eig.values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Admissibility { admissible: min_eigenvalue >= -tol, min_eigenvalue })
}

/// Median-heuristic bandwidth: draw `sample_count` vectors (with replacement,
/// seeded) from the rows of `values` (flat, row-major, `dim` per row), take
/// the median of all ordered pairwise distances ‖x−y‖_α^α (midpoint
/// convention for even counts), and return λ = c / median.
pub fn bandwidth_from_data(
    values: &[u16],
    dim: usize,
    alpha: f64,
    c: f64,
    sample_count: usize,
    seed: u64,
) -> Result<f64, KernelError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(KernelError::BadAlpha { alpha });
    }
    if dim == 0 || values.len() % dim != 0 {
        return Err(KernelError::ShapeMismatch { len: values.len(), dim });
    }
    let n = values.len() / dim;
    if n == 0 || sample_count == 0 {
        return Err(KernelError::EmptySample);
    }

    let mut rng = SplitMix64::new(seed);
    let picks: Vec<usize> = (0..sample_count).map(|_| rng.next_below(n as u64) as usize).collect();

    // Ordered pairs including the diagonal; distances are symmetric, so each
    // unordered pair is computed once and counted twice.
    let mut dists = Vec::with_capacity(sample_count * sample_count);
    for a in 0..sample_count {
        dists.push(0.0); // (a, a)
        let xa = &values[picks[a] * dim..(picks[a] + 1) * dim];
        for b in (a + 1)..sample_count {
            let xb = &values[picks[b] * dim..(picks[b] + 1) * dim];
            let d = if alpha == 1.0 {
                let mut s: u64 = 0;
                for (&u, &v) in xa.iter().zip(xb) {
                    s += u.abs_diff(v) as u64;
                }
                s as f64
            } else {
                let mut s = 0.0;
                for (&u, &v) in xa.iter().zip(xb) {
                    s += pow(u.abs_diff(v) as f64, alpha);
                }
                s
            };
            dists.push(d);
            dists.push(d);
        }
    }

    dists.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let len = dists.len();
    let median = if len % 2 == 1 {
        dists[len / 2]
    } else {
        (dists[len / 2 - 1] + dists[len / 2]) / 2.0
    };
    if median <= 0.0 {
        return Err(KernelError::DegenerateSample);
    }
    Ok(c / median)
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::fabs;

    #[test]
    fn profile_matches_frozen_high_precision_values() {
        // alpha = 1, lambda = 0.05: K(1,2) to 16 digits, per an independent
        // high-precision evaluation of (2/π)·asin(exp(−π²/8·λ²)).
        let km = build_kernel(&KernelSpec::new(1.0, 0.05, 8)).unwrap();
        assert!(fabs(km.affinity(1, 2) - 0.9500256981268433) < 1e-15);
        // Laplace limit: within 2(λr)² of exp(−λr).
        assert!(fabs(km.affinity(1, 2) - exp(-0.05)) <= 0.0025);
    }

    #[test]
    fn literal_convention_changes_the_profile() {
        let mut spec = KernelSpec::new(1.0, 0.05, 8);
        spec.convention = ExponentConvention::Lambda;
        let km = build_kernel(&spec).unwrap();
        assert!(fabs(km.affinity(1, 2) - 0.7786848216071977) < 1e-15);
        // The bare-λ profile is far outside the Laplace-limit tolerance.
        assert!(fabs(km.affinity(1, 2) - exp(-0.05)) > 0.1);
    }

    #[test]
    fn laplace_limit_holds_across_a_grid() {
        // m = 64 alphabet with λ·r ≤ 0.1 across the whole range.
        let lambda = 0.1 / 63.0;
        let km = build_kernel(&KernelSpec::new(1.0, lambda, 64)).unwrap();
        for r in 1..64usize {
            let k = km.affinity(1, 1 + r as u16);
            let gap = fabs(k - exp(-lambda * r as f64));
            let bound = 2.0 * (lambda * r as f64) * (lambda * r as f64);
            assert!(gap <= bound, "r={r}: gap {gap:e} > bound {bound:e}");
        }
    }

    #[test]
    fn kernel_matrix_shape_invariants() {
        let km = build_kernel(&KernelSpec::new(0.75, 0.2, 17)).unwrap();
        for i in 0..17 {
            assert_eq!(km.k.get(i, i), 1.0);
            assert_eq!(km.w.get(i, i), 1.0);
            for j in 0..17 {
                let k = km.k.get(i, j);
                assert!((0.0..=1.0).contains(&k));
                assert_eq!(k, km.k.get(j, i));
                // W is the entrywise lift of K.
                assert!(fabs(km.w.get(i, j) - sin(PI / 2.0 * k)) < 1e-15);
            }
        }
    }

    #[test]
    fn lift_identity_for_default_convention() {
        // With the λ² convention the lift is exactly the Gaussian-family
        // profile exp(−π²/8·λ²·r^{2α}).
        let spec = KernelSpec::new(1.0, 0.1, 16);
        let km = build_kernel(&spec).unwrap();
        for r in 0..16usize {
            let want = exp(-(PI * PI / 8.0) * 0.01 * (r * r) as f64);
            assert!(fabs(km.w.get(0, r) - want) < 1e-15);
        }
    }

    #[test]
    fn build_kernel_validates_parameters() {
        assert!(matches!(
            build_kernel(&KernelSpec::new(0.0, 0.1, 8)),
            Err(KernelError::BadAlpha { .. })
        ));
        assert!(matches!(
            build_kernel(&KernelSpec::new(1.5, 0.1, 8)),
            Err(KernelError::BadAlpha { .. })
        ));
        assert!(matches!(
            build_kernel(&KernelSpec::new(1.0, 0.0, 8)),
            Err(KernelError::BadLambda { .. })
        ));
        assert!(matches!(
            build_kernel(&KernelSpec::new(1.0, f64::NAN, 8)),
            Err(KernelError::BadLambda { .. })
        ));
        assert!(matches!(
            build_kernel(&KernelSpec::new(1.0, 0.1, 0)),
            Err(KernelError::BadAlphabet { .. })
        ));
    }

    #[test]
    fn admissible_for_the_default_family_and_all_ones() {
        let km = build_kernel(&KernelSpec::new(1.0, 0.1, 32)).unwrap();
        let a = check_admissible(&km.k, 1e-8).unwrap();
        assert!(a.admissible, "min eigenvalue {}", a.min_eigenvalue);

        let mut ones = DenseMatrix::zeros(8, 8);
        for i in 0..8 {
            for j in 0..8 {
                ones.set(i, j, 1.0);
            }
        }
        let a = check_admissible(&ones, 1e-8).unwrap();
        assert!(a.admissible);
    }

    #[test]
    fn inadmissible_when_the_lift_needs_exponent_beyond_two() {
        // Choose K so the lift is exp(−λ·r⁴): not PSD (exponent > 2), with a
        // decisively negative eigenvalue.
        let m = 32;
        let mut k = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let r = i.abs_diff(j) as f64;
                k.set(i, j, (2.0 / PI) * asin(exp(-0.01 * r * r * r * r)));
            }
        }
        let a = check_admissible(&k, 1e-8).unwrap();
        assert!(!a.admissible);
        assert!(a.min_eigenvalue < -1e-6);
    }

    #[test]
    fn check_admissible_rejects_out_of_range_entries() {
        let mut k = DenseMatrix::zeros(2, 2);
        k.set(0, 0, 2.0);
        assert!(matches!(check_admissible(&k, 1e-8), Err(KernelError::BadAffinity { .. })));
    }

    #[test]
    fn bandwidth_worked_example() {
        // Two vectors (0,0) and (4,4); with one draw of each the ordered-pair
        // distances are {0, 0, 8, 8}, median 4, so λ = c/4.
        let values: Vec<u16> = vec![0, 0, 4, 4];
        let mut seed = 0u64;
        loop {
            let mut rng = SplitMix64::new(seed);
            let a = rng.next_below(2);
            let b = rng.next_below(2);
            if a != b {
                break;
            }
            seed += 1;
        }
        let lam = bandwidth_from_data(&values, 2, 1.0, 1.0, 2, seed).unwrap();
        assert_eq!(lam, 0.25);
        let lam4 = bandwidth_from_data(&values, 2, 1.0, 4.0, 2, seed).unwrap();
        assert_eq!(lam4, 1.0);
    }

    #[test]
    fn bandwidth_scales_inversely_with_distances() {
        // Doubling every coordinate doubles L1 distances and halves λ.
        let mut base: Vec<u16> = Vec::new();
        let mut doubled: Vec<u16> = Vec::new();
        for i in 0..50u16 {
            for j in 0..4u16 {
                base.push(i * 3 + j * 7);
                doubled.push(2 * (i * 3 + j * 7));
            }
        }
        let l1 = bandwidth_from_data(&base, 4, 1.0, 1.0, 200, 9).unwrap();
        let l2 = bandwidth_from_data(&doubled, 4, 1.0, 1.0, 200, 9).unwrap();
        assert!(fabs(l1 / l2 - 2.0) < 1e-12);
    }

    #[test]
    fn bandwidth_degenerate_sample_is_an_error() {
        let values: Vec<u16> = vec![3, 3, 3, 3, 3, 3]; // three identical rows
        assert!(matches!(
            bandwidth_from_data(&values, 2, 1.0, 1.0, 10, 1),
            Err(KernelError::DegenerateSample)
        ));
    }

    #[test]
    fn bandwidth_validates_shape() {
        assert!(matches!(
            bandwidth_from_data(&[1, 2, 3], 2, 1.0, 1.0, 2, 0),
            Err(KernelError::ShapeMismatch { .. })
        ));
        assert!(matches!(
            bandwidth_from_data(&[], 2, 1.0, 1.0, 2, 0),
            Err(KernelError::EmptySample)
        ));
    }

    #[test]
    fn bandwidth_is_seed_deterministic() {
        let values: Vec<u16> = (0..400).map(|i| (i * 13 % 97) as u16).collect();
        let a = bandwidth_from_data(&values, 8, 1.0, 1.0, 30, 5).unwrap();
        let b = bandwidth_from_data(&values, 8, 1.0, 1.0, 30, 5).unwrap();
        assert_eq!(a, b);
    }
}
