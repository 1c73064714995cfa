//! Correlated binary hypervectors: V = sign(G·F).
//!
//! Given the lifted kernel W (m×m, PSD up to truncation), factor W ≈ FᵀF and
//! draw G as an N×m standard Gaussian; column j of V = sign(G·F) is the
//! hypervector of alphabet value j+1. By Grothendieck's identity,
//! E[v_i(k)·v_j(k)] = (2/π)·asin(W(i,j)) = K(i,j), so empirical column
//! correlations converge to the affinity at rate O(N^{−1/2}).
//!
//! Rows of G come from a counter-based generator, so the set is a pure
//! function of (kernel, N, seed) and any row can be regenerated in
//! isolation. Columns are stored bit-packed (bit 1 ↔ −1) and duplicated
//! head-to-tail so that the encoder can XOR any cyclic rotation straight out
//! of the buffer with two word reads per output word.

use alloc::vec;
use alloc::vec::Vec;

use crate::encoder::PackedHypervector;
use crate::kernel::{KernelMatrix, KernelSpec};
use crate::numerics::{psd_factor, NumericsError};
use crate::rng::GaussianField;

/// Hypervectors for every alphabet value, bit-packed column-wise.
#[derive(Clone, Debug)]
pub struct HypervectorSet {
    n: usize,
    m: usize,
    /// Per value: 2n bits (the n-bit column stored twice), plus a pad word.
    doubled: Vec<Vec<u64>>,
    spec: KernelSpec,
    seed: u64,
    truncated: bool,
    min_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum HypervectorError {
    BadDimension { n: usize },
    WrongKernelShape { rows: usize, cols: usize, m: usize },
    Numerics(NumericsError),
}

impl core::fmt::Display for HypervectorError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            HypervectorError::BadDimension { n } => {
                write!(f, "hyperdimension must be positive, got {n}")
            }
            HypervectorError::WrongKernelShape { rows, cols, m } => {
                write!(f, "lifted kernel is {rows}x{cols}, expected {m}x{m}")
            }
            HypervectorError::Numerics(e) => write!(f, "{e}"),
        }
    }
}

impl From<NumericsError> for HypervectorError {
    fn from(e: NumericsError) -> Self {
        HypervectorError::Numerics(e)
    }
}

/// Negative-eigenvalue tolerance: eigenvalues of W below −1e−8 set the
/// `truncated` flag (they are clipped to zero either way).
const TRUNCATION_TOL: f64 = 1e-8;

/// Draw the hypervector set for a kernel: V = sign(G·F) with W ≈ FᵀF.
///
/// sign(0) counts as +1. Entry (r, c) of G depends only on (seed, r, c), so
/// the result is reproducible regardless of evaluation order.
pub fn generate_hypervectors(
    km: &KernelMatrix,
    n: usize,
    seed: u64,
) -> Result<HypervectorSet, HypervectorError> {
    let m = km.spec.m;
    if n == 0 {
        return Err(HypervectorError::BadDimension { n });
    }
    if km.w.rows() != m || km.w.cols() != m {
        return Err(HypervectorError::WrongKernelShape { rows: km.w.rows(), cols: km.w.cols(), m });
    }

    let psd = psd_factor(&km.w, TRUNCATION_TOL)?;
    // Row c of ft is column c of F: the inner products below run contiguously.
    let ft = psd.factor.transposed();

    let words = n.div_ceil(64);
    let mut columns = vec![vec![0u64; words]; m];
    let field = GaussianField::new(seed);
    let mut g = vec![0.0f64; m];
    for r in 0..n {
        for (k, slot) in g.iter_mut().enumerate() {
            *slot = field.at(r as u64, k as u64);
        }
        let (w, b) = (r / 64, (r % 64) as u32);
        for (c, col) in columns.iter_mut().enumerate() {
            let mut dot = 0.0;
            for (gk, fk) in g.iter().zip(ft.row(c)) {
                dot += gk * fk;
            }
            if dot < 0.0 {
                col[w] |= 1u64 << b;
            }
        }
    }

    let doubled = columns.iter().map(|col| double_bits(col, n)).collect();
    Ok(HypervectorSet {
        n,
        m,
        doubled,
        spec: km.spec,
        seed,
        truncated: psd.truncated,
        min_eigenvalue: psd.min_eigenvalue,
    })
}

// Store the n-bit column twice in a row (bit k and bit k+n agree), padded so
// rotation extraction can always read one word past the end.
fn double_bits(col: &[u64], n: usize) -> Vec<u64> {
    let out_words = (2 * n).div_ceil(64) + 1;
    let mut out = vec![0u64; out_words];
    out[..col.len()].copy_from_slice(col);
    for k in 0..n {
        let bit = (col[k / 64] >> (k % 64)) & 1;
        let p = k + n;
        out[p / 64] |= bit << (p % 64);
    }
    out
}

impl HypervectorSet {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Alphabet size m; value v ∈ {1..m} owns column v−1.
    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// True iff W had an eigenvalue below −1e−8 that was clipped.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// Bit k of column `col` (1 ↔ −1).
    #[inline]
    pub(crate) fn column_bit(&self, col: usize, k: usize) -> u64 {
        (self.doubled[col][k / 64] >> (k % 64)) & 1
    }

    /// Sign at (row, col) as ±1.
    pub fn sign_at(&self, row: usize, col: usize) -> i8 {
        if self.column_bit(col, row) == 1 {
            -1
        } else {
            1
        }
    }

    /// The hypervector of alphabet value `col + 1`.
    pub fn column(&self, col: usize) -> PackedHypervector {
        let words = self.n.div_ceil(64);
        let mut w = self.doubled[col][..words].to_vec();
        mask_tail(&mut w, self.n);
        PackedHypervector::from_raw(self.n, w)
    }

    /// XOR the rotation of column `col` by `shift` into `acc`:
    /// acc(k) ^= column bit ((k + shift) mod n). Requires shift < n and
    /// acc.len() = ⌈n/64⌉; tail bits of acc are left unmasked.
    #[inline]
    pub(crate) fn xor_rotated_into(&self, acc: &mut [u64], col: usize, shift: usize) {
        let dbl = &self.doubled[col];
        let base = shift >> 6;
        let off = shift & 63;
        if off == 0 {
            for (a, d) in acc.iter_mut().zip(&dbl[base..]) {
                *a ^= d;
            }
        } else {
            for (w, a) in acc.iter_mut().enumerate() {
                *a ^= (dbl[base + w] >> off) | (dbl[base + w + 1] << (64 - off));
            }
        }
    }

    /// Empirical correlation v_i·v_j / n between two columns.
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        let words = self.n.div_ceil(64);
        let mut differing = 0u64;
        for w in 0..words {
            let mut x = self.doubled[i][w] ^ self.doubled[j][w];
            if w == words - 1 && self.n % 64 != 0 {
                x &= (1u64 << (self.n % 64)) - 1;
            }
            differing += x.count_ones() as u64;
        }
        (self.n as f64 - 2.0 * differing as f64) / self.n as f64
    }
}

pub(crate) fn mask_tail(words: &mut [u64], n: usize) {
    if n % 64 != 0 {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << (n % 64)) - 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_kernel, KernelSpec};
    use crate::numerics::DenseMatrix;

    fn kernel_with_w(m: usize, w: DenseMatrix) -> KernelMatrix {
        // Identity K placeholder: generation only reads w and spec.m.
        KernelMatrix { spec: KernelSpec::new(1.0, 0.1, m), k: DenseMatrix::identity(m), w }
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let km = build_kernel(&KernelSpec::new(1.0, 0.1, 4)).unwrap();
        let a = generate_hypervectors(&km, 500, 7).unwrap();
        let b = generate_hypervectors(&km, 500, 7).unwrap();
        let c = generate_hypervectors(&km, 500, 8).unwrap();
        for col in 0..4 {
            assert_eq!(a.column(col).words(), b.column(col).words());
        }
        assert!((0..4).any(|col| a.column(col).words() != c.column(col).words()));
    }

    #[test]
    fn identity_kernel_reduces_to_sign_of_gaussians() {
        // W = I makes F = I, so column c is sign of Gaussian column c.
        let m = 3;
        let km = kernel_with_w(m, DenseMatrix::identity(m));
        let hv = generate_hypervectors(&km, 200, 11).unwrap();
        let field = crate::rng::GaussianField::new(11);
        for c in 0..m {
            for r in 0..200 {
                let want = if field.at(r as u64, c as u64) < 0.0 { -1 } else { 1 };
                assert_eq!(hv.sign_at(r, c), want);
            }
        }
    }

    #[test]
    fn zero_covariance_column_is_all_plus_one() {
        // W(2,2) = 0 forces a zero dot product for column 2: sign(0) = +1.
        let mut w = DenseMatrix::zeros(2, 2);
        w.set(0, 0, 1.0);
        let km = kernel_with_w(2, w);
        let hv = generate_hypervectors(&km, 130, 3).unwrap();
        assert!(!hv.truncated());
        for r in 0..130 {
            assert_eq!(hv.sign_at(r, 1), 1);
        }
        assert_eq!(hv.correlation(1, 1), 1.0);
    }

    #[test]
    fn correlations_track_the_kernel() {
        let spec = KernelSpec::new(1.0, 0.1, 8);
        let km = build_kernel(&spec).unwrap();
        let n = 20_000;
        let hv = generate_hypervectors(&km, n, 42).unwrap();
        assert!(!hv.truncated());
        for i in 0..8 {
            assert_eq!(hv.correlation(i, i), 1.0);
            for j in 0..8 {
                let k = km.k.get(i, j);
                let se = libm::sqrt((1.0 - k * k).max(1e-12) / n as f64);
                let err = libm::fabs(hv.correlation(i, j) - k);
                assert!(err <= 4.0 * se, "pair ({i},{j}): err {err:.4} > 4se {:.4}", 4.0 * se);
            }
        }
    }

    #[test]
    fn truncation_flag_reports_clipped_eigenvalues() {
        // [[1, 2],[2, 1]] has eigenvalue −1 < −1e−8.
        let w = DenseMatrix::from_data(2, 2, vec![1.0, 2.0, 2.0, 1.0]);
        let km = kernel_with_w(2, w);
        let hv = generate_hypervectors(&km, 64, 1).unwrap();
        assert!(hv.truncated());
        assert!(hv.min_eigenvalue() < -0.5);
    }

    #[test]
    fn doubled_buffer_agrees_with_column_bits() {
        let km = build_kernel(&KernelSpec::new(1.0, 0.2, 5)).unwrap();
        let n = 201; // deliberately not word-aligned
        let hv = generate_hypervectors(&km, n, 9).unwrap();
        for c in 0..5 {
            let col = hv.column(c);
            for k in 0..n {
                assert_eq!(hv.column_bit(c, k), col.bit(k) as u64);
                // second copy
                let p = k + n;
                assert_eq!((hv.doubled[c][p / 64] >> (p % 64)) & 1, col.bit(k) as u64);
            }
        }
    }

    #[test]
    fn rotation_extraction_matches_naive_rotation() {
        let km = build_kernel(&KernelSpec::new(1.0, 0.3, 3)).unwrap();
        for n in [64usize, 100, 129, 256] {
            let hv = generate_hypervectors(&km, n, 5).unwrap();
            let words = n.div_ceil(64);
            for shift in [0usize, 1, 63, 64, 65, n - 1] {
                let mut acc = vec![0u64; words];
                hv.xor_rotated_into(&mut acc, 2, shift);
                mask_tail(&mut acc, n);
                for k in 0..n {
                    let got = (acc[k / 64] >> (k % 64)) & 1;
                    assert_eq!(got, hv.column_bit(2, (k + shift) % n), "n={n} shift={shift} k={k}");
                }
            }
        }
    }

    #[test]
    fn rejects_zero_dimension_and_shape_mismatch() {
        let km = build_kernel(&KernelSpec::new(1.0, 0.1, 4)).unwrap();
        assert!(matches!(
            generate_hypervectors(&km, 0, 1),
            Err(HypervectorError::BadDimension { .. })
        ));
        let bad = KernelMatrix {
            spec: KernelSpec::new(1.0, 0.1, 4),
            k: DenseMatrix::identity(3),
            w: DenseMatrix::identity(3),
        };
        assert!(matches!(
            generate_hypervectors(&bad, 10, 1),
            Err(HypervectorError::WrongKernelShape { .. })
        ));
    }
}
