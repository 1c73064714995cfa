//! Trace-orthogonal permutation families for position binding.
//!
//! Each family assigns feature index i a permutation Π_i of {0..N−1}; the
//! encoder computes ψ_x = ⊙_i Π_i v_{x(i)}. All four kinds are free
//! translation actions (index 0 is the identity):
//!
//! * `Cyclic1d` — rotation of the whole vector by i,
//! * `Block1d` — rotation of d contiguous blocks of length M (N = dM),
//! * `Cyclic2d` — 2D shift on an M×M torus, indexed by image position
//!   (a,b) ∈ {0..L−1}² with d = L² and N = M²,
//! * `Block2d` — 2D shift of each L×L plane of M stacked copies (N = ML²),
//!   which makes the encoding exactly translation-equivariant.
//!
//! Freeness gives the two structural facts used elsewhere: distinct indices
//! have disjoint matrix supports (trace orthogonality), and the overlap
//! constant γ = ‖Σ_i Σ_{i'} Π_i Π_{i'}ᵀ‖₀ counts distinct relative shifts
//! times N — for Cyclic1d with N ≥ 2d−1 exactly (2d−1)·N, for Block1d d·N.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

/// A family of N-point permutations indexed by feature position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PermutationFamily {
    Cyclic1d { d: usize, n: usize },
    Block1d { d: usize, block_len: usize },
    Cyclic2d { image_side: usize, torus_side: usize },
    Block2d { image_side: usize, copies: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PermutationError {
    BadShape { reason: &'static str },
    IndexOutOfRange { index: usize, d: usize },
    LengthMismatch { len: usize, n: usize },
}

impl core::fmt::Display for PermutationError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PermutationError::BadShape { reason } => write!(f, "bad family shape: {reason}"),
            PermutationError::IndexOutOfRange { index, d } => {
                write!(f, "feature index {index} out of range for {d} features")
            }
            PermutationError::LengthMismatch { len, n } => {
                write!(f, "vector length {len} does not match hyperdimension {n}")
            }
        }
    }
}

use PermutationFamily::*;

impl PermutationFamily {
    pub fn cyclic_1d(d: usize, n: usize) -> Result<Self, PermutationError> {
        if d == 0 || n == 0 {
            return Err(PermutationError::BadShape { reason: "d and N must be positive" });
        }
        if d > n {
            return Err(PermutationError::BadShape { reason: "Cyclic1d needs d <= N" });
        }
        Ok(Cyclic1d { d, n })
    }

    pub fn block_1d(d: usize, block_len: usize) -> Result<Self, PermutationError> {
        if d == 0 || block_len == 0 {
            return Err(PermutationError::BadShape { reason: "d and block length must be positive" });
        }
        Ok(Block1d { d, block_len })
    }

    pub fn cyclic_2d(image_side: usize, torus_side: usize) -> Result<Self, PermutationError> {
        if image_side == 0 {
            return Err(PermutationError::BadShape { reason: "image side must be positive" });
        }
        if torus_side < image_side {
            return Err(PermutationError::BadShape { reason: "Cyclic2d needs torus side >= image side" });
        }
        Ok(Cyclic2d { image_side, torus_side })
    }

    pub fn block_2d(image_side: usize, copies: usize) -> Result<Self, PermutationError> {
        if image_side == 0 || copies == 0 {
            return Err(PermutationError::BadShape { reason: "image side and copies must be positive" });
        }
        Ok(Block2d { image_side, copies })
    }

    /// Number of feature positions the family binds.
    pub fn d(&self) -> usize {
        match *self {
            Cyclic1d { d, .. } | Block1d { d, .. } => d,
            Cyclic2d { image_side, .. } | Block2d { image_side, .. } => image_side * image_side,
        }
    }

    /// Hyperdimension N the permutations act on.
    pub fn n(&self) -> usize {
        match *self {
            Cyclic1d { n, .. } => n,
            Block1d { d, block_len } => d * block_len,
            Cyclic2d { torus_side, .. } => torus_side * torus_side,
            Block2d { image_side, copies } => copies * image_side * image_side,
        }
    }

    /// Linear feature index for 2D image position (row, col).
    pub fn index_of_pair(&self, row: usize, col: usize) -> Result<usize, PermutationError> {
        match *self {
            Cyclic2d { image_side, .. } | Block2d { image_side, .. } => {
                if row >= image_side || col >= image_side {
                    return Err(PermutationError::IndexOutOfRange {
                        index: row * image_side + col,
                        d: image_side * image_side,
                    });
                }
                Ok(row * image_side + col)
            }
            _ => Err(PermutationError::BadShape { reason: "pair indices only apply to 2D kinds" }),
        }
    }

    /// Source position feeding output `position` under Π_index:
    /// (Π_index v)(position) = v(source_index(index, position)).
    #[inline]
    pub fn source_index(&self, index: usize, position: usize) -> usize {
        match *self {
            Cyclic1d { n, .. } => {
                let p = position + index;
                if p >= n {
                    p - n
                } else {
                    p
                }
            }
            Block1d { d, block_len } => {
                let n = d * block_len;
                let p = position + index * block_len;
                if p >= n {
                    p - n
                } else {
                    p
                }
            }
            Cyclic2d { image_side, torus_side } => {
                let (a, b) = (index / image_side, index % image_side);
                let (r, c) = (position / torus_side, position % torus_side);
                let rr = (r + a) % torus_side;
                let cc = (c + b) % torus_side;
                rr * torus_side + cc
            }
            Block2d { image_side, copies } => {
                let (a, b) = (index / image_side, index % image_side);
                let plane = image_side * copies;
                let r = position / plane;
                let rem = position % plane;
                let c = rem / copies;
                let t = rem % copies;
                let rr = (r + a) % image_side;
                let cc = (c + b) % image_side;
                (rr * image_side + cc) * copies + t
            }
        }
    }

    /// For kinds whose action is a single whole-vector rotation, the bit
    /// rotation amount of Π_index; None for the 2D kinds.
    #[inline]
    pub fn rotation_bits(&self, index: usize) -> Option<usize> {
        match *self {
            Cyclic1d { .. } => Some(index),
            // Block rotation by i blocks is bit rotation by i·M (mod N).
            Block1d { block_len, .. } => Some(index * block_len),
            _ => None,
        }
    }

    fn check_index(&self, index: usize) -> Result<(), PermutationError> {
        if index >= self.d() {
            return Err(PermutationError::IndexOutOfRange { index, d: self.d() });
        }
        Ok(())
    }

    /// Apply Π_index to a sign vector.
    pub fn apply(&self, index: usize, v: &[i8]) -> Result<Vec<i8>, PermutationError> {
        self.check_index(index)?;
        let n = self.n();
        if v.len() != n {
            return Err(PermutationError::LengthMismatch { len: v.len(), n });
        }
        let mut out = vec![0i8; n];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = v[self.source_index(index, k)];
        }
        Ok(out)
    }

    /// Apply Π_index⁻¹ to a sign vector.
    pub fn apply_inverse(&self, index: usize, v: &[i8]) -> Result<Vec<i8>, PermutationError> {
        self.check_index(index)?;
        let n = self.n();
        if v.len() != n {
            return Err(PermutationError::LengthMismatch { len: v.len(), n });
        }
        let mut out = vec![0i8; n];
        for (k, &val) in v.iter().enumerate() {
            out[self.source_index(index, k)] = val;
        }
        Ok(out)
    }

    // Group element of Π_index in the family's translation group, encoded so
    // that equal codes mean equal permutations.
    fn group_element(&self, index: usize) -> u64 {
        match *self {
            Cyclic1d { .. } | Block1d { .. } => index as u64,
            Cyclic2d { image_side, .. } | Block2d { image_side, .. } => {
                let (a, b) = (index / image_side, index % image_side);
                (a as u64) << 32 | b as u64
            }
        }
    }

    // Group difference of two elements (the translation Π_i Π_{i'}ᵀ).
    fn group_difference(&self, e1: u64, e2: u64) -> u64 {
        match *self {
            Cyclic1d { n, .. } => (e1 + n as u64 - e2) % n as u64,
            Block1d { d, .. } => (e1 + d as u64 - e2) % d as u64,
            Cyclic2d { torus_side, .. } => {
                let m = torus_side as u64;
                let (a1, b1) = (e1 >> 32, e1 & 0xFFFF_FFFF);
                let (a2, b2) = (e2 >> 32, e2 & 0xFFFF_FFFF);
                ((a1 + m - a2) % m) << 32 | (b1 + m - b2) % m
            }
            Block2d { image_side, .. } => {
                let l = image_side as u64;
                let (a1, b1) = (e1 >> 32, e1 & 0xFFFF_FFFF);
                let (a2, b2) = (e2 >> 32, e2 & 0xFFFF_FFFF);
                ((a1 + l - a2) % l) << 32 | (b1 + l - b2) % l
            }
        }
    }
}

/// True iff all Π_i have pairwise disjoint matrix supports, i.e. every pair
/// satisfies tr(Π_i Π_{i'}ᵀ) = 0.
///
/// The families are free translation actions, so two members collide on some
/// position iff they are the same group element; the check reduces to
/// distinctness of the d elements.
pub fn check_trace_orthogonal(family: &PermutationFamily) -> bool {
    let mut seen = BTreeSet::new();
    (0..family.d()).all(|i| seen.insert(family.group_element(i)))
}

/// Overlap constant γ = ‖Σ_i Σ_{i'} Π_i Π_{i'}ᵀ‖₀.
///
/// Each product Π_i Π_{i'}ᵀ is the permutation matrix of the relative shift
/// between indices i and i'; distinct shifts have disjoint supports of N
/// entries each, so γ = (#distinct relative shifts)·N.
pub fn gamma(family: &PermutationFamily) -> u64 {
    let d = family.d();
    let elements: Vec<u64> = (0..d).map(|i| family.group_element(i)).collect();
    let mut shifts = BTreeSet::new();
    for &e1 in &elements {
        for &e2 in &elements {
            shifts.insert(family.group_difference(e1, e2));
        }
    }
    shifts.len() as u64 * family.n() as u64
}
