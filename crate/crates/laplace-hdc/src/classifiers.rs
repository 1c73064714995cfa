//! Per-class representatives over ±1 encodings and maximum-inner-product
//! classification.
//!
//! Two training routes: majority (entrywise vote or mean per class) and a
//! c×N linear layer without bias, trained with Adam-moment stochastic
//! gradient descent on softmax cross-entropy of the c similarity scores.
//! Training always consumes the unpacked ±1 values as floats; inference for
//! the binary modes runs entirely on packed words (XOR + popcount), which
//! reproduces the float argmax exactly because every score is an integer.
//!
//! Class ids are 1-based and dense: labels take values in {1..c} and every
//! class must be represented in training. Ties in prediction resolve toward
//! the smallest class id.

use alloc::vec;
use alloc::vec::Vec;

use crate::encoder::PackedHypervector;
use crate::features::FeatureProvenance;
use crate::kernel::KernelSpec;
use crate::permutations::PermutationFamily;
use crate::rng::{mix, SplitMix64};

/// Adam moment decays and epsilon (conventional defaults).
const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassifierKind {
    MajorityBinary,
    MajorityFloat,
    SgdFloat,
    SgdBinary,
}

/// Everything needed to rebuild the exact encoder that produced the
/// training encodings, carried alongside persisted models.
#[derive(Clone, Debug)]
pub struct ModelProvenance {
    pub kernel: KernelSpec,
    pub family: PermutationFamily,
    pub hv_seed: u64,
    pub features: FeatureProvenance,
}

/// Class representatives: one packed ±1 vector per class for binary modes,
/// one float vector per class for float modes.
#[derive(Clone, Debug)]
pub enum Representatives {
    Binary(Vec<PackedHypervector>),
    /// class_count × n, row-major.
    Float { n: usize, weights: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct ClassModel {
    kind: ClassifierKind,
    class_count: usize,
    n: usize,
    reps: Representatives,
    provenance: Option<ModelProvenance>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SgdParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Binary mode only: clamp weights to [−1,1] at epoch boundaries instead
    /// of after every optimizer step.
    pub clamp_per_epoch: bool,
}

impl SgdParams {
    pub fn defaults(seed: u64) -> Self {
        SgdParams { learning_rate: 0.01, epochs: 3, batch_size: 64, seed, clamp_per_epoch: false }
    }
}

/// Trained model plus the mean cross-entropy observed in each epoch
/// (computed from the forward passes, before that batch's update).
#[derive(Clone, Debug)]
pub struct SgdOutcome {
    pub model: ClassModel,
    pub epoch_loss: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ClassifierError {
    LengthMismatch { labels: usize, encodings: usize },
    EmptyTrainingSet,
    BadLabel { label: u16 },
    EmptyClass { class: u16 },
    MixedEncodingLengths { a: usize, b: usize },
    BatchSizeZero,
    WrongVectorLength { got: usize, want: usize },
    BadRepresentatives { reason: &'static str },
}

impl core::fmt::Display for ClassifierError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ClassifierError::LengthMismatch { labels, encodings } => {
                write!(f, "{labels} labels for {encodings} encodings")
            }
            ClassifierError::EmptyTrainingSet => write!(f, "no training encodings"),
            ClassifierError::BadLabel { label } => {
                write!(f, "label {label} invalid: class ids start at 1")
            }
            ClassifierError::EmptyClass { class } => {
                write!(f, "class {class} has no training samples")
            }
            ClassifierError::MixedEncodingLengths { a, b } => {
                write!(f, "encodings of different lengths: {a} vs {b}")
            }
            ClassifierError::BatchSizeZero => write!(f, "batch size must be positive"),
            ClassifierError::WrongVectorLength { got, want } => {
                write!(f, "vector length {got} does not match model length {want}")
            }
            ClassifierError::BadRepresentatives { reason } => write!(f, "{reason}"),
        }
    }
}

impl ClassModel {
    /// Assemble a model from parts (e.g. deserialization), revalidating the
    /// shape invariants.
    pub fn from_parts(
        kind: ClassifierKind,
        reps: Representatives,
        provenance: Option<ModelProvenance>,
    ) -> Result<Self, ClassifierError> {
        let (class_count, n) = match &reps {
            Representatives::Binary(vs) => {
                let Some(first) = vs.first() else {
                    return Err(ClassifierError::BadRepresentatives { reason: "no representatives" });
                };
                if vs.iter().any(|v| v.n() != first.n()) {
                    return Err(ClassifierError::BadRepresentatives {
                        reason: "representatives of different lengths",
                    });
                }
                if !matches!(kind, ClassifierKind::MajorityBinary | ClassifierKind::SgdBinary) {
                    return Err(ClassifierError::BadRepresentatives {
                        reason: "packed representatives on a float-mode model",
                    });
                }
                (vs.len(), first.n())
            }
            Representatives::Float { n, weights } => {
                if *n == 0 || weights.is_empty() || weights.len() % n != 0 {
                    return Err(ClassifierError::BadRepresentatives {
                        reason: "float weights do not tile into class rows",
                    });
                }
                if !matches!(kind, ClassifierKind::MajorityFloat | ClassifierKind::SgdFloat) {
                    return Err(ClassifierError::BadRepresentatives {
                        reason: "float representatives on a binary-mode model",
                    });
                }
                (weights.len() / n, *n)
            }
        };
        Ok(ClassModel { kind, class_count, n, reps, provenance })
    }

    pub fn kind(&self) -> ClassifierKind {
        self.kind
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn representatives(&self) -> &Representatives {
        &self.reps
    }

    pub fn provenance(&self) -> Option<&ModelProvenance> {
        self.provenance.as_ref()
    }

    pub fn with_provenance(mut self, provenance: ModelProvenance) -> Self {
        self.provenance = Some(provenance);
        self
    }
}

// Validate the (encodings, labels) pair; returns (class_count, n).
fn check_training_set(
    encoded: &[PackedHypervector],
    labels: &[u16],
) -> Result<(usize, usize), ClassifierError> {
    if encoded.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    if labels.len() != encoded.len() {
        return Err(ClassifierError::LengthMismatch { labels: labels.len(), encodings: encoded.len() });
    }
    let n = encoded[0].n();
    for e in encoded.iter() {
        if e.n() != n {
            return Err(ClassifierError::MixedEncodingLengths { a: n, b: e.n() });
        }
    }
    let mut c = 0u16;
    for &l in labels {
        if l == 0 {
            return Err(ClassifierError::BadLabel { label: l });
        }
        c = c.max(l);
    }
    let mut seen = vec![false; c as usize + 1];
    for &l in labels {
        seen[l as usize] = true;
    }
    for class in 1..=c {
        if !seen[class as usize] {
            return Err(ClassifierError::EmptyClass { class });
        }
    }
    Ok((c as usize, n))
}

// Per-class entrywise sums of the ±1 entries, c × n.
fn class_sign_sums(
    encoded: &[PackedHypervector],
    labels: &[u16],
    class_count: usize,
    n: usize,
) -> Vec<f64> {
    let mut sums = vec![0.0f64; class_count * n];
    for (e, &l) in encoded.iter().zip(labels) {
        let row = &mut sums[(l as usize - 1) * n..(l as usize) * n];
        for (w, word) in e.words().iter().enumerate() {
            let base = w * 64;
            let top = 64.min(n - base);
            for b in 0..top {
                // bit 1 ↔ −1
                row[base + b] += 1.0 - 2.0 * ((word >> b) & 1) as f64;
            }
        }
    }
    sums
}

/// Majority-vote training: binary mode signs each per-class entry sum
/// (+1 iff the sum is strictly positive, so an exact tie gives −1); float
/// mode stores the per-class entry means.
pub fn train_majority(
    encoded: &[PackedHypervector],
    labels: &[u16],
    binary: bool,
) -> Result<ClassModel, ClassifierError> {
    let (class_count, n) = check_training_set(encoded, labels)?;
    let sums = class_sign_sums(encoded, labels, class_count, n);
    if binary {
        let mut reps = Vec::with_capacity(class_count);
        for class in 0..class_count {
            let row = &sums[class * n..(class + 1) * n];
            let signs: Vec<i8> = row.iter().map(|&s| if s > 0.0 { 1 } else { -1 }).collect();
            reps.push(PackedHypervector::from_signs(&signs));
        }
        Ok(ClassModel {
            kind: ClassifierKind::MajorityBinary,
            class_count,
            n,
            reps: Representatives::Binary(reps),
            provenance: None,
        })
    } else {
        let mut counts = vec![0.0f64; class_count];
        for &l in labels {
            counts[l as usize - 1] += 1.0;
        }
        let mut weights = sums;
        for class in 0..class_count {
            for w in &mut weights[class * n..(class + 1) * n] {
                *w /= counts[class];
            }
        }
        Ok(ClassModel {
            kind: ClassifierKind::MajorityFloat,
            class_count,
            n,
            reps: Representatives::Float { n, weights },
            provenance: None,
        })
    }
}

// ±1 values of a packed vector as floats, into a reused buffer.
fn unpack_signs_into(psi: &PackedHypervector, out: &mut [f64]) {
    let n = psi.n();
    for (w, word) in psi.words().iter().enumerate() {
        let base = w * 64;
        let top = 64.min(n - base);
        for b in 0..top {
            out[base + b] = 1.0 - 2.0 * ((word >> b) & 1) as f64;
        }
    }
}

fn softmax_inplace(scores: &mut [f64]) {
    let mut peak = f64::NEG_INFINITY;
    for &s in scores.iter() {
        if s > peak {
            peak = s;
        }
    }
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = libm::exp(*s - peak);
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
}

fn clamp_unit(weights: &mut [f64]) {
    for w in weights {
        *w = w.clamp(-1.0, 1.0);
    }
}

/// Linear-layer training with Adam moments on softmax cross-entropy.
///
/// The logits are the class similarity scores ⟨w_c, ψ⟩/√N: the 1/√N factor
/// puts the scores of ±1 inputs at unit variance per unit weight, which is
/// the softmax temperature the learning rate default is calibrated for
/// (raw N-scale scores saturate the softmax and stall training). Prediction
/// is argmax over inner products, so the factor never affects inference.
///
/// Weights start at zero. Samples are reshuffled every epoch with a seed
/// derived from (params.seed, epoch), so runs are bit-reproducible. Binary
/// mode keeps weights in [−1,1] while training (after every step, or at
/// epoch ends under `clamp_per_epoch`) and signs them at the end with
/// sign(0) = +1.
pub fn train_sgd(
    encoded: &[PackedHypervector],
    labels: &[u16],
    binary: bool,
    params: &SgdParams,
) -> Result<SgdOutcome, ClassifierError> {
    let (class_count, n) = check_training_set(encoded, labels)?;
    if params.batch_size == 0 {
        return Err(ClassifierError::BatchSizeZero);
    }
    let c = class_count;
    let mut weights = vec![0.0f64; c * n];
    let mut moment1 = vec![0.0f64; c * n];
    let mut moment2 = vec![0.0f64; c * n];
    let mut grad = vec![0.0f64; c * n];
    let mut signs = vec![0.0f64; n];
    let mut scores = vec![0.0f64; c];
    let mut order: Vec<u32> = (0..encoded.len() as u32).collect();
    let mut epoch_loss = Vec::with_capacity(params.epochs);
    let mut step = 0u32;
    let temperature = 1.0 / libm::sqrt(n as f64);

    for epoch in 0..params.epochs {
        let mut rng = SplitMix64::new(mix(params.seed, epoch as u64));
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;

        for batch in order.chunks(params.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &sample in batch {
                let psi = &encoded[sample as usize];
                unpack_signs_into(psi, &mut signs);
                for (i, s) in scores.iter_mut().enumerate() {
                    let row = &weights[i * n..(i + 1) * n];
                    let mut acc = 0.0;
                    for (w, x) in row.iter().zip(&signs) {
                        acc += w * x;
                    }
                    *s = acc * temperature;
                }
                softmax_inplace(&mut scores);
                let target = labels[sample as usize] as usize - 1;
                loss_sum -= libm::log(scores[target].max(1e-300));
                for i in 0..c {
                    let coeff = (scores[i] - if i == target { 1.0 } else { 0.0 }) * scale * temperature;
                    let row = &mut grad[i * n..(i + 1) * n];
                    for (g, x) in row.iter_mut().zip(&signs) {
                        *g += coeff * x;
                    }
                }
            }

            // Adam step with bias correction (1-indexed step count).
            step += 1;
            let bc1 = 1.0 - libm::pow(BETA1, step as f64);
            let bc2 = 1.0 - libm::pow(BETA2, step as f64);
            for k in 0..c * n {
                let g = grad[k];
                moment1[k] = BETA1 * moment1[k] + (1.0 - BETA1) * g;
                moment2[k] = BETA2 * moment2[k] + (1.0 - BETA2) * g * g;
                let mhat = moment1[k] / bc1;
                let vhat = moment2[k] / bc2;
                weights[k] -= params.learning_rate * mhat / (libm::sqrt(vhat) + EPSILON);
            }
            if binary && !params.clamp_per_epoch {
                clamp_unit(&mut weights);
            }
        }

        if binary && params.clamp_per_epoch {
            clamp_unit(&mut weights);
        }
        epoch_loss.push(loss_sum / encoded.len() as f64);
    }

    let model = if binary {
        let mut reps = Vec::with_capacity(c);
        for class in 0..c {
            let row = &weights[class * n..(class + 1) * n];
            let signed: Vec<i8> = row.iter().map(|&w| if w < 0.0 { -1 } else { 1 }).collect();
            reps.push(PackedHypervector::from_signs(&signed));
        }
        ClassModel {
            kind: ClassifierKind::SgdBinary,
            class_count: c,
            n,
            reps: Representatives::Binary(reps),
            provenance: None,
        }
    } else {
        ClassModel {
            kind: ClassifierKind::SgdFloat,
            class_count: c,
            n,
            reps: Representatives::Float { n, weights },
            provenance: None,
        }
    };
    Ok(SgdOutcome { model, epoch_loss })
}

/// Classify by maximum inner product with the representatives; ties go to
/// the smallest class id. Returns a 1-based class id.
pub fn predict(model: &ClassModel, psi: &PackedHypervector) -> Result<u16, ClassifierError> {
    if psi.n() != model.n {
        return Err(ClassifierError::WrongVectorLength { got: psi.n(), want: model.n });
    }
    let mut best_class = 1u16;
    match &model.reps {
        Representatives::Binary(reps) => {
            let mut best = i64::MIN;
            for (i, rep) in reps.iter().enumerate() {
                let mut differing = 0u64;
                for (a, b) in psi.words().iter().zip(rep.words()) {
                    differing += (a ^ b).count_ones() as u64;
                }
                let score = model.n as i64 - 2 * differing as i64;
                if score > best {
                    best = score;
                    best_class = i as u16 + 1;
                }
            }
        }
        Representatives::Float { n, weights } => {
            let mut best = f64::NEG_INFINITY;
            for i in 0..model.class_count {
                let row = &weights[i * n..(i + 1) * n];
                let mut score = 0.0;
                for (w, word) in psi.words().iter().enumerate() {
                    let base = w * 64;
                    let top = 64.min(n - base);
                    for b in 0..top {
                        score += row[base + b] * (1.0 - 2.0 * ((word >> b) & 1) as f64);
                    }
                }
                if score > best {
                    best = score;
                    best_class = i as u16 + 1;
                }
            }
        }
    }
    Ok(best_class)
}
