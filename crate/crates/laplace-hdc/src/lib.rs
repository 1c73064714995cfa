//! Laplace-HDC: binary hyperdimensional encoding with covariance-structured
//! hypervectors and permutation binding.
//!
//! The pipeline turns a feature vector x ∈ {1..m}^d into a long binary
//! hypervector ψ_x ∈ {−1,+1}^N in three steps:
//!
//! 1. A translation-invariant affinity K on the alphabet {1..m} is chosen so
//!    that K(i,j) ≈ exp(−λ|i−j|) (module [`kernel`]).
//! 2. Hypervectors v_1..v_m are drawn as signs of correlated Gaussians so that
//!    E[v_i·v_j]/N = K(i,j) (module [`hypervectors`]).
//! 3. Features are bound to positions by a trace-orthogonal permutation family
//!    and combined entrywise, ψ_x = ⊙_i Π_i v_{x(i)} (modules [`permutations`],
//!    [`encoder`]).
//!
//! Expected similarities factor as E[ψ_x·ψ_y]/N = Π_i K(x(i), y(i)), with a
//! variance bound controlled by the family's overlap constant γ; module
//! [`verify`] checks these identities by Monte Carlo. Modules [`features`] and
//! [`classifiers`] supply the feature pipelines (raw / decorrelated / local
//! filter banks) and the classifiers (majority vote and SGD, float or binary)
//! used in the experiments.
//!
//! The crate is `no_std` (with `alloc`); all randomness is seeded and
//! reproducible.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod classifiers;
pub mod encoder;
pub mod features;
pub mod hypervectors;
pub mod kernel;
pub mod numerics;
pub mod permutations;
pub mod rng;
pub mod verify;

pub use classifiers::{
    predict, train_majority, train_sgd, ClassModel, ClassifierKind, ModelProvenance, SgdParams,
};
pub use encoder::{encode, encode_batch, flip_bits, similarity, EncoderConfig, PackedHypervector};
pub use features::{
    haar_features, quantize_raw, svd_features, FeatureBatch, FeatureProvenance, HaarFilterBank,
    ImageBatch,
};
pub use hypervectors::{generate_hypervectors, HypervectorSet};
pub use kernel::{bandwidth_from_data, build_kernel, check_admissible, ExponentConvention, KernelMatrix, KernelSpec};
pub use permutations::PermutationFamily;
pub use verify::{equivariance_check, mc_similarity, schoenberg_scan, theory_similarity};
