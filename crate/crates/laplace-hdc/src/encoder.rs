//! Binding encoder: ψ_x = ⊙_i Π_i v_{x(i)} over packed bits.
//!
//! Signs are bit-packed 64 per word with bit 1 ↔ −1, so the entrywise
//! product ⊙ is XOR and similarity is a popcount:
//! ψ_a·ψ_b = N − 2·hamming(a, b). Trailing bits beyond N are kept zero in
//! every stored vector.
//!
//! The two 1D families act as whole-vector bit rotations and are applied
//! straight out of the doubled column buffers (two word reads per output
//! word); the 2D families go through a per-position gather. Both paths are
//! bit-exact matches of the unpacked sign-vector definition.

use alloc::vec;
use alloc::vec::Vec;

use crate::features::FeatureBatch;
use crate::hypervectors::{mask_tail, HypervectorSet};
use crate::permutations::{PermutationFamily, PermutationError};
use crate::rng::SplitMix64;

/// Sign vector in {−1,+1}^N, bit-packed (bit 1 ↔ −1, tail bits zero).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackedHypervector {
    n: usize,
    words: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EncodeError {
    DimensionMismatch { got: usize, want: usize },
    ValueOutOfRange { value: u16, m: usize },
    LengthMismatch { a: usize, b: usize },
    FlipCountTooLarge { k: usize, n: usize },
    ShapeMismatch { hv_n: usize, family_n: usize },
    BadWords { reason: &'static str },
    Permutation(PermutationError),
}

impl core::fmt::Display for EncodeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EncodeError::DimensionMismatch { got, want } => {
                write!(f, "feature vector has {got} entries, family binds {want}")
            }
            EncodeError::ValueOutOfRange { value, m } => {
                write!(f, "feature value {value} outside alphabet 1..={m}")
            }
            EncodeError::LengthMismatch { a, b } => {
                write!(f, "hypervector lengths differ: {a} vs {b}")
            }
            EncodeError::FlipCountTooLarge { k, n } => {
                write!(f, "cannot flip {k} distinct bits of {n}")
            }
            EncodeError::ShapeMismatch { hv_n, family_n } => {
                write!(f, "hypervectors have N = {hv_n} but the family acts on N = {family_n}")
            }
            EncodeError::BadWords { reason } => write!(f, "{reason}"),
            EncodeError::Permutation(e) => write!(f, "{e}"),
        }
    }
}

impl From<PermutationError> for EncodeError {
    fn from(e: PermutationError) -> Self {
        EncodeError::Permutation(e)
    }
}

impl PackedHypervector {
    /// All +1 (all bits zero).
    pub fn ones(n: usize) -> Self {
        PackedHypervector { n, words: vec![0u64; n.div_ceil(64)] }
    }

    pub(crate) fn from_raw(n: usize, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), n.div_ceil(64));
        PackedHypervector { n, words }
    }

    /// Reassemble from raw words (e.g. deserialization). The word count must
    /// match n and the trailing bits beyond n must be zero.
    pub fn from_words(n: usize, words: Vec<u64>) -> Result<Self, EncodeError> {
        if n == 0 || words.len() != n.div_ceil(64) {
            return Err(EncodeError::BadWords { reason: "word count does not match length" });
        }
        if n % 64 != 0 && words[words.len() - 1] >> (n % 64) != 0 {
            return Err(EncodeError::BadWords { reason: "bits set beyond the vector length" });
        }
        Ok(PackedHypervector { n, words })
    }

    pub fn from_signs(signs: &[i8]) -> Self {
        let n = signs.len();
        let mut words = vec![0u64; n.div_ceil(64)];
        for (k, &s) in signs.iter().enumerate() {
            if s < 0 {
                words[k / 64] |= 1u64 << (k % 64);
            }
        }
        PackedHypervector { n, words }
    }

    pub fn to_signs(&self) -> Vec<i8> {
        (0..self.n).map(|k| if self.bit(k) { -1 } else { 1 }).collect()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Bit k: true ↔ −1.
    #[inline]
    pub fn bit(&self, k: usize) -> bool {
        (self.words[k / 64] >> (k % 64)) & 1 == 1
    }

    /// Entrywise product (XOR of sign bits).
    pub fn bind(&self, other: &Self) -> Result<Self, EncodeError> {
        if self.n != other.n {
            return Err(EncodeError::LengthMismatch { a: self.n, b: other.n });
        }
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect();
        Ok(PackedHypervector { n: self.n, words })
    }

    /// Number of −1 entries.
    pub fn count_minus(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }
}

/// Inner product ψ_a·ψ_b = N − 2·hamming(a, b).
pub fn similarity(a: &PackedHypervector, b: &PackedHypervector) -> Result<i64, EncodeError> {
    if a.n != b.n {
        return Err(EncodeError::LengthMismatch { a: a.n, b: b.n });
    }
    let mut differing = 0u64;
    for (x, y) in a.words.iter().zip(&b.words) {
        differing += (x ^ y).count_ones() as u64;
    }
    Ok(a.n as i64 - 2 * differing as i64)
}

/// Flip exactly k distinct, uniformly chosen bits (seeded); the similarity to
/// the original is exactly N − 2k.
pub fn flip_bits(psi: &PackedHypervector, k: usize, seed: u64) -> Result<PackedHypervector, EncodeError> {
    let n = psi.n;
    if k > n {
        return Err(EncodeError::FlipCountTooLarge { k, n });
    }
    // Partial Fisher–Yates: the first k entries are a uniform k-subset.
    let mut idx: Vec<u32> = (0..n as u32).collect();
    let mut rng = SplitMix64::new(seed);
    let mut out = psi.clone();
    for i in 0..k {
        let j = i + rng.next_below((n - i) as u64) as usize;
        idx.swap(i, j);
        let p = idx[i] as usize;
        out.words[p / 64] ^= 1u64 << (p % 64);
    }
    Ok(out)
}

/// A hypervector set paired with a compatible permutation family.
#[derive(Clone, Debug)]
pub struct EncoderConfig {
    hv: HypervectorSet,
    family: PermutationFamily,
}

impl EncoderConfig {
    pub fn new(hv: HypervectorSet, family: PermutationFamily) -> Result<Self, EncodeError> {
        if hv.n() != family.n() {
            return Err(EncodeError::ShapeMismatch { hv_n: hv.n(), family_n: family.n() });
        }
        Ok(EncoderConfig { hv, family })
    }

    pub fn hypervectors(&self) -> &HypervectorSet {
        &self.hv
    }

    pub fn family(&self) -> &PermutationFamily {
        &self.family
    }

    /// Feature dimension d expected by `encode`.
    pub fn d(&self) -> usize {
        self.family.d()
    }

    /// Hyperdimension N of the encodings.
    pub fn n(&self) -> usize {
        self.hv.n()
    }
}

/// Encode one feature vector x ∈ {1..m}^d as ψ_x = ⊙_i Π_i v_{x(i)}.
pub fn encode(cfg: &EncoderConfig, x: &[u16]) -> Result<PackedHypervector, EncodeError> {
    let d = cfg.family.d();
    let n = cfg.hv.n();
    let m = cfg.hv.m();
    if x.len() != d {
        return Err(EncodeError::DimensionMismatch { got: x.len(), want: d });
    }
    let mut acc = vec![0u64; n.div_ceil(64)];
    for (idx, &val) in x.iter().enumerate() {
        if val == 0 || val as usize > m {
            return Err(EncodeError::ValueOutOfRange { value: val, m });
        }
        let col = val as usize - 1;
        match cfg.family.rotation_bits(idx) {
            Some(shift) => cfg.hv.xor_rotated_into(&mut acc, col, shift),
            None => xor_gathered_into(&cfg.family, &cfg.hv, &mut acc, col, idx),
        }
    }
    mask_tail(&mut acc, n);
    Ok(PackedHypervector::from_raw(n, acc))
}

// 2D kinds: gather column bits through the torus/plane shift, assembling
// output words 64 bits at a time.
fn xor_gathered_into(
    family: &PermutationFamily,
    hv: &HypervectorSet,
    acc: &mut [u64],
    col: usize,
    index: usize,
) {
    let mut word = 0u64;
    let mut filled = 0u32;
    let mut w = 0usize;
    let mut push = |bit: u64| {
        word |= bit << filled;
        filled += 1;
        if filled == 64 {
            acc[w] ^= word;
            w += 1;
            word = 0;
            filled = 0;
        }
    };
    match *family {
        PermutationFamily::Cyclic2d { image_side, torus_side } => {
            let (a, b) = (index / image_side, index % image_side);
            for r in 0..torus_side {
                let row_base = ((r + a) % torus_side) * torus_side;
                let mut cc = b;
                for _ in 0..torus_side {
                    push(hv.column_bit(col, row_base + cc));
                    cc += 1;
                    if cc == torus_side {
                        cc = 0;
                    }
                }
            }
        }
        PermutationFamily::Block2d { image_side, copies } => {
            let (a, b) = (index / image_side, index % image_side);
            for r in 0..image_side {
                let rr = (r + a) % image_side;
                let mut cc = b;
                for _ in 0..image_side {
                    let src_base = (rr * image_side + cc) * copies;
                    for t in 0..copies {
                        push(hv.column_bit(col, src_base + t));
                    }
                    cc += 1;
                    if cc == image_side {
                        cc = 0;
                    }
                }
            }
        }
        _ => unreachable!("1D kinds use the rotation path"),
    }
    drop(push);
    if filled > 0 {
        acc[w] ^= word;
    }
}

/// Encode every row of a feature batch (sequentially; each row is
/// independent, so the result equals any-order evaluation).
pub fn encode_batch(cfg: &EncoderConfig, batch: &FeatureBatch) -> Result<Vec<PackedHypervector>, EncodeError> {
    let mut out = Vec::with_capacity(batch.count);
    for i in 0..batch.count {
        out.push(encode(cfg, batch.row(i))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureProvenance;
    use crate::kernel::{build_kernel, KernelSpec};
    use crate::hypervectors::generate_hypervectors;
    use proptest::prelude::*;

    fn small_config(m: usize, n: usize, family: PermutationFamily, seed: u64) -> EncoderConfig {
        let km = build_kernel(&KernelSpec::new(1.0, 0.15, m)).unwrap();
        let hv = generate_hypervectors(&km, n, seed).unwrap();
        EncoderConfig::new(hv, family).unwrap()
    }

    // Unpacked reference: apply permutations to sign vectors and multiply.
    fn encode_reference(cfg: &EncoderConfig, x: &[u16]) -> Vec<i8> {
        let n = cfg.n();
        let mut acc = vec![1i8; n];
        for (idx, &val) in x.iter().enumerate() {
            let col: Vec<i8> = (0..n).map(|k| cfg.hypervectors().sign_at(k, val as usize - 1)).collect();
            let permuted = cfg.family().apply(idx, &col).unwrap();
            for (a, p) in acc.iter_mut().zip(&permuted) {
                *a *= p;
            }
        }
        acc
    }

    #[test]
    fn packed_roundtrip_and_tail_invariant() {
        let signs: Vec<i8> = (0..77).map(|k| if k % 3 == 0 { -1 } else { 1 }).collect();
        let p = PackedHypervector::from_signs(&signs);
        assert_eq!(p.to_signs(), signs);
        assert_eq!(p.n(), 77);
        // tail bits zero
        assert_eq!(p.words()[1] >> (77 - 64), 0);
        assert_eq!(p.count_minus(), signs.iter().filter(|&&s| s < 0).count() as u64);
    }

    #[test]
    fn from_words_validates_shape_and_tail() {
        let signs: Vec<i8> = (0..70).map(|k| if k % 2 == 0 { -1 } else { 1 }).collect();
        let p = PackedHypervector::from_signs(&signs);
        let back = PackedHypervector::from_words(70, p.words().to_vec()).unwrap();
        assert_eq!(back, p);
        assert!(PackedHypervector::from_words(70, vec![0u64; 1]).is_err());
        assert!(PackedHypervector::from_words(70, vec![0u64, 1u64 << 6]).is_err());
        assert!(PackedHypervector::from_words(0, vec![]).is_err());
    }

    #[test]
    fn similarity_is_n_minus_twice_hamming() {
        let a = PackedHypervector::from_signs(&[1, 1, -1, 1, -1]);
        let b = PackedHypervector::from_signs(&[1, -1, -1, 1, 1]);
        assert_eq!(similarity(&a, &b).unwrap(), 5 - 2 * 2);
        assert_eq!(similarity(&a, &a).unwrap(), 5);
        let c = PackedHypervector::ones(4);
        assert!(similarity(&a, &c).is_err());
    }

    #[test]
    fn bind_is_entrywise_product() {
        let a = PackedHypervector::from_signs(&[1, -1, 1, -1]);
        let b = PackedHypervector::from_signs(&[1, 1, -1, -1]);
        assert_eq!(a.bind(&b).unwrap().to_signs(), vec![1, -1, -1, 1]);
    }

    #[test]
    fn encode_matches_unpacked_reference_on_all_kinds() {
        let cases: Vec<(PermutationFamily, Vec<u16>)> = vec![
            (PermutationFamily::cyclic_1d(5, 150).unwrap(), vec![1, 4, 2, 4, 3]),
            (PermutationFamily::block_1d(5, 31).unwrap(), vec![4, 1, 1, 2, 3]),
            (PermutationFamily::cyclic_2d(2, 13).unwrap(), vec![2, 3, 1, 4]),
            (PermutationFamily::block_2d(3, 7).unwrap(), vec![1, 2, 3, 4, 1, 2, 3, 4, 2]),
        ];
        for (seed, (family, x)) in cases.into_iter().enumerate() {
            let cfg = small_config(4, family.n(), family, seed as u64);
            let packed = encode(&cfg, &x).unwrap();
            let reference = encode_reference(&cfg, &x);
            assert_eq!(packed.to_signs(), reference);
        }
    }

    #[test]
    fn encode_validates_inputs() {
        let fam = PermutationFamily::cyclic_1d(3, 100).unwrap();
        let cfg = small_config(4, 100, fam, 0);
        assert!(matches!(
            encode(&cfg, &[1, 2]),
            Err(EncodeError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            encode(&cfg, &[1, 2, 5]),
            Err(EncodeError::ValueOutOfRange { .. })
        ));
        assert!(matches!(
            encode(&cfg, &[1, 2, 0]),
            Err(EncodeError::ValueOutOfRange { .. })
        ));
    }

    #[test]
    fn config_rejects_mismatched_shapes() {
        let km = build_kernel(&KernelSpec::new(1.0, 0.1, 2)).unwrap();
        let hv = generate_hypervectors(&km, 64, 0).unwrap();
        let fam = PermutationFamily::cyclic_1d(4, 128).unwrap();
        assert!(matches!(
            EncoderConfig::new(hv, fam),
            Err(EncodeError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn encode_batch_equals_per_sample_encode() {
        let fam = PermutationFamily::cyclic_1d(4, 96).unwrap();
        let cfg = small_config(3, 96, fam, 21);
        let batch = FeatureBatch {
            count: 3,
            dim: 4,
            m: 3,
            values: vec![1, 2, 3, 1, 3, 3, 2, 2, 1, 1, 1, 2],
            provenance: FeatureProvenance::Raw { side: 2 },
        };
        let all = encode_batch(&cfg, &batch).unwrap();
        for i in 0..3 {
            assert_eq!(all[i], encode(&cfg, batch.row(i)).unwrap());
        }
    }

    #[test]
    fn flip_bits_flips_exactly_k_distinct_positions() {
        let fam = PermutationFamily::cyclic_1d(4, 130).unwrap();
        let cfg = small_config(3, 130, fam, 2);
        let psi = encode(&cfg, &[1, 2, 3, 1]).unwrap();
        for k in [0usize, 1, 7, 65, 130] {
            let flipped = flip_bits(&psi, k, 99).unwrap();
            assert_eq!(similarity(&psi, &flipped).unwrap(), 130 - 2 * k as i64);
        }
        assert!(flip_bits(&psi, 131, 0).is_err());
        // Same seed, same flips; different seed, (almost surely) different.
        assert_eq!(flip_bits(&psi, 10, 5).unwrap(), flip_bits(&psi, 10, 5).unwrap());
        assert_ne!(flip_bits(&psi, 10, 5).unwrap(), flip_bits(&psi, 10, 6).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn packed_encode_equals_reference(
            kind in 0usize..4,
            a in 1usize..5,
            b in 1usize..5,
            seed in 0u64..10_000,
        ) {
            let family = match kind {
                0 => PermutationFamily::cyclic_1d(a, 60 + b * 13).unwrap(),
                1 => PermutationFamily::block_1d(a, 20 + b).unwrap(),
                2 => PermutationFamily::cyclic_2d(a, a + b + 6).unwrap(),
                _ => PermutationFamily::block_2d(a, b + 20).unwrap(),
            };
            let d = family.d();
            let cfg = small_config(5, family.n(), family, seed);
            let mut rng = SplitMix64::new(seed ^ 0xABCD);
            let x: Vec<u16> = (0..d).map(|_| 1 + rng.next_below(5) as u16).collect();
            let packed = encode(&cfg, &x).unwrap();
            prop_assert_eq!(packed.to_signs(), encode_reference(&cfg, &x));
        }

        #[test]
        fn similarity_is_symmetric_and_bounded(
            n in 1usize..200,
            seed in 0u64..1000,
        ) {
            let mut rng = SplitMix64::new(seed);
            let xs: Vec<i8> = (0..n).map(|_| if rng.next_u64() & 1 == 0 { 1 } else { -1 }).collect();
            let ys: Vec<i8> = (0..n).map(|_| if rng.next_u64() & 1 == 0 { 1 } else { -1 }).collect();
            let a = PackedHypervector::from_signs(&xs);
            let b = PackedHypervector::from_signs(&ys);
            let s = similarity(&a, &b).unwrap();
            prop_assert_eq!(s, similarity(&b, &a).unwrap());
            prop_assert!(s.abs() <= n as i64);
            prop_assert_eq!((s - n as i64) % 2, 0);
            // agrees with the sign-domain dot product
            let dot: i64 = xs.iter().zip(&ys).map(|(&x, &y)| (x as i64) * (y as i64)).sum();
            prop_assert_eq!(s, dot);
        }
    }
}
