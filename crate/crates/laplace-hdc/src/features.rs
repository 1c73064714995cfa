//! Image-to-feature transforms producing integer vectors in {1..m}^d.
//!
//! Three pipelines with a shared quantization convention:
//!
//! * raw — each pixel shifted by one, so bytes 0..=255 become values 1..=256;
//! * haar — valid (no-padding) correlation with a bank of nine 4×4 filters
//!   at a fixed stride, features ordered filter-major;
//! * svd — rotation onto the eigenbasis of the training Gram matrix XᵀX,
//!   eigenvalue-descending, optionally truncated to a leading rank.
//!
//! The real-valued transforms (haar, svd) map each coordinate affinely to
//! [0, 255] using the minimum and maximum fitted on training data only,
//! round half-up, clamp, then shift by one into {1..=256}. A coordinate that
//! is constant on the training set maps to byte 128 by convention. Basis
//! columns whose eigenvalue falls below 1e−10 of the largest are zeroed
//! outright, so rank-deficient directions quantize as exactly constant
//! rather than as eigensolver noise.

use alloc::vec;
use alloc::vec::Vec;

use crate::numerics::{sym_eigen, DenseMatrix, NumericsError};

/// Filters below this fraction of the top Gram eigenvalue count as null
/// directions and their basis columns are zeroed.
const RANK_TOL: f64 = 1e-10;

/// Relative threshold handed to the symmetric eigensolver.
const EIGEN_TOL: f64 = 1e-12;

/// A batch of square grayscale images, row-major per image.
#[derive(Clone, Debug)]
pub struct ImageBatch {
    count: usize,
    side: usize,
    pixels: Vec<u8>,
}

/// Integer feature vectors in {1..m}^d plus the fitted transform that
/// produced them, so the identical map can be replayed on held-out data.
#[derive(Clone, Debug)]
pub struct FeatureBatch {
    pub count: usize,
    pub dim: usize,
    pub m: usize,
    /// count·dim values, row-major, each in 1..=m.
    pub values: Vec<u16>,
    pub provenance: FeatureProvenance,
}

/// Fitted transform parameters; everything needed to transform new images.
#[derive(Clone, Debug)]
pub enum FeatureProvenance {
    Raw { side: usize },
    Haar { side: usize, bank: HaarFilterBank, mins: Vec<f64>, maxs: Vec<f64> },
    Svd { basis: DenseMatrix, mins: Vec<f64>, maxs: Vec<f64> },
}

/// Nine 4×4 correlation filters applied at a fixed stride.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarFilterBank {
    /// 9·16 coefficients, filter-major, each filter row-major.
    coeffs: Vec<f64>,
    stride: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeatureError {
    BadPixelCount { got: usize, want: usize },
    SideTooSmall { side: usize },
    BadStride { side: usize, stride: usize },
    BadFilterBank { got: usize },
    RankTooLarge { rank: usize, d: usize },
    DimensionMismatch { got: usize, want: usize },
    WrongProvenance,
    Numerics(NumericsError),
}

impl core::fmt::Display for FeatureError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FeatureError::BadPixelCount { got, want } => {
                write!(f, "pixel buffer holds {got} bytes, batch shape needs {want}")
            }
            FeatureError::SideTooSmall { side } => {
                write!(f, "image side {side} is smaller than the 4×4 filter support")
            }
            FeatureError::BadStride { side, stride } => {
                write!(f, "stride {stride} does not tile side {side}: (side − 4) must be a multiple")
            }
            FeatureError::BadFilterBank { got } => {
                write!(f, "filter bank needs 9·16 coefficients, got {got}")
            }
            FeatureError::RankTooLarge { rank, d } => {
                write!(f, "requested rank {rank} exceeds feature dimension {d}")
            }
            FeatureError::DimensionMismatch { got, want } => {
                write!(f, "batch dimension {got} does not match fitted transform ({want})")
            }
            FeatureError::WrongProvenance => {
                write!(f, "provenance does not carry the parameters this transform needs")
            }
            FeatureError::Numerics(e) => write!(f, "{e}"),
        }
    }
}

impl From<NumericsError> for FeatureError {
    fn from(e: NumericsError) -> Self {
        FeatureError::Numerics(e)
    }
}

impl ImageBatch {
    pub fn new(count: usize, side: usize, pixels: Vec<u8>) -> Result<Self, FeatureError> {
        let want = count * side * side;
        if pixels.len() != want {
            return Err(FeatureError::BadPixelCount { got: pixels.len(), want });
        }
        Ok(ImageBatch { count, side, pixels })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let px = self.side * self.side;
        &self.pixels[i * px..(i + 1) * px]
    }
}

impl FeatureBatch {
    pub fn row(&self, i: usize) -> &[u16] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

impl HaarFilterBank {
    /// The 4-point Haar–Walsh tensor family: outer products hₐh_bᵀ of
    /// h₀ = (1,1,1,1)/2, h₁ = (1,1,−1,−1)/2, h₂ = (1,−1,1,−1)/2 for
    /// a, b ∈ {0,1,2}. Filter 0 (h₀h₀ᵀ) is all-positive; the other eight
    /// are zero-sum, so they annihilate constant images.
    pub fn haar_walsh(stride: usize) -> Self {
        let h: [[f64; 4]; 3] = [
            [0.5, 0.5, 0.5, 0.5],
            [0.5, 0.5, -0.5, -0.5],
            [0.5, -0.5, 0.5, -0.5],
        ];
        let mut coeffs = Vec::with_capacity(9 * 16);
        for a in 0..3 {
            for b in 0..3 {
                for u in 0..4 {
                    for v in 0..4 {
                        coeffs.push(h[a][u] * h[b][v]);
                    }
                }
            }
        }
        HaarFilterBank { coeffs, stride }
    }

    /// Custom bank with the same shape contract (nine 4×4 filters).
    pub fn new(coeffs: Vec<f64>, stride: usize) -> Result<Self, FeatureError> {
        if coeffs.len() != 9 * 16 {
            return Err(FeatureError::BadFilterBank { got: coeffs.len() });
        }
        Ok(HaarFilterBank { coeffs, stride })
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// The 16 row-major coefficients of filter f ∈ 0..9.
    pub fn filter(&self, f: usize) -> &[f64] {
        &self.coeffs[f * 16..(f + 1) * 16]
    }

    /// Output positions per axis on an L×L image: (L − 4)/s + 1.
    pub fn positions(&self, side: usize) -> Result<usize, FeatureError> {
        if side < 4 {
            return Err(FeatureError::SideTooSmall { side });
        }
        if self.stride == 0 || (side - 4) % self.stride != 0 {
            return Err(FeatureError::BadStride { side, stride: self.stride });
        }
        Ok((side - 4) / self.stride + 1)
    }
}

/// Shift every pixel by one: byte b becomes feature value b + 1, m = 256.
pub fn quantize_raw(images: &ImageBatch) -> FeatureBatch {
    let dim = images.side * images.side;
    let values = images.pixels.iter().map(|&p| p as u16 + 1).collect();
    FeatureBatch {
        count: images.count,
        dim,
        m: 256,
        values,
        provenance: FeatureProvenance::Raw { side: images.side },
    }
}

fn round_half_up(x: f64) -> f64 {
    libm::floor(x + 0.5)
}

// Affine map to [0,255] with train-fitted extremes, round half-up, clamp,
// then shift into {1..=256}. Constant coordinates pin to byte 128.
fn quantize_responses(resp: &[f64], dim: usize, mins: &[f64], maxs: &[f64]) -> Vec<u16> {
    resp.iter()
        .enumerate()
        .map(|(k, &x)| {
            let j = k % dim;
            let byte = if maxs[j] > mins[j] {
                let y = round_half_up((x - mins[j]) / (maxs[j] - mins[j]) * 255.0);
                y.clamp(0.0, 255.0)
            } else {
                128.0
            };
            byte as u16 + 1
        })
        .collect()
}

fn fit_minmax(resp: &[f64], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mins = vec![f64::INFINITY; dim];
    let mut maxs = vec![f64::NEG_INFINITY; dim];
    for (k, &x) in resp.iter().enumerate() {
        let j = k % dim;
        if x < mins[j] {
            mins[j] = x;
        }
        if x > maxs[j] {
            maxs[j] = x;
        }
    }
    (mins, maxs)
}

// Valid correlation of every filter with every image at the bank's stride;
// responses ordered filter-major: index = f·P² + i·P + j.
pub(crate) fn haar_responses(images: &ImageBatch, bank: &HaarFilterBank) -> Result<Vec<f64>, FeatureError> {
    let side = images.side;
    let p = bank.positions(side)?;
    let s = bank.stride;
    let dim = 9 * p * p;
    let mut resp = Vec::with_capacity(images.count * dim);
    for img in 0..images.count {
        let px = images.image(img);
        for f in 0..9 {
            let w = bank.filter(f);
            for i in 0..p {
                for j in 0..p {
                    let (top, left) = (i * s, j * s);
                    let mut acc = 0.0;
                    for u in 0..4 {
                        let row = &px[(top + u) * side + left..(top + u) * side + left + 4];
                        for v in 0..4 {
                            acc += w[u * 4 + v] * row[v] as f64;
                        }
                    }
                    resp.push(acc);
                }
            }
        }
    }
    Ok(resp)
}

/// Correlate both batches with the filter bank, then quantize with extremes
/// fitted on the training responses alone.
pub fn haar_features(
    train: &ImageBatch,
    test: &ImageBatch,
    bank: &HaarFilterBank,
) -> Result<(FeatureBatch, FeatureBatch), FeatureError> {
    if test.side != train.side {
        return Err(FeatureError::DimensionMismatch { got: test.side, want: train.side });
    }
    let p = bank.positions(train.side)?;
    let dim = 9 * p * p;
    let train_resp = haar_responses(train, bank)?;
    let (mins, maxs) = fit_minmax(&train_resp, dim);
    let prov = FeatureProvenance::Haar {
        side: train.side,
        bank: bank.clone(),
        mins: mins.clone(),
        maxs: maxs.clone(),
    };
    let train_fb = FeatureBatch {
        count: train.count,
        dim,
        m: 256,
        values: quantize_responses(&train_resp, dim, &mins, &maxs),
        provenance: prov.clone(),
    };
    let test_fb = apply_haar(&prov, test)?;
    Ok((train_fb, test_fb))
}

/// Replay a fitted haar transform on new images.
pub fn apply_haar(prov: &FeatureProvenance, images: &ImageBatch) -> Result<FeatureBatch, FeatureError> {
    let FeatureProvenance::Haar { side, bank, mins, maxs } = prov else {
        return Err(FeatureError::WrongProvenance);
    };
    if images.side != *side {
        return Err(FeatureError::DimensionMismatch { got: images.side, want: *side });
    }
    let dim = mins.len();
    let resp = haar_responses(images, bank)?;
    Ok(FeatureBatch {
        count: images.count,
        dim,
        m: 256,
        values: quantize_responses(&resp, dim, mins, maxs),
        provenance: prov.clone(),
    })
}

// Rows of the batch as f64, projected onto the basis: out = X·V.
fn project(batch: &FeatureBatch, basis: &DenseMatrix) -> Vec<f64> {
    let (d, rank) = (basis.rows(), basis.cols());
    let mut out = vec![0.0; batch.count * rank];
    for r in 0..batch.count {
        let row = batch.row(r);
        let dst = &mut out[r * rank..(r + 1) * rank];
        for i in 0..d {
            let xi = row[i] as f64;
            let brow = basis.row(i);
            for (o, &b) in dst.iter_mut().zip(brow) {
                *o += xi * b;
            }
        }
    }
    out
}

/// Rotate features onto the eigenbasis of the training Gram matrix XᵀX
/// (eigenvalue-descending, truncated to `rank` columns, null directions
/// zeroed), then quantize with train-fitted extremes.
pub fn svd_features(
    train: &FeatureBatch,
    test: &FeatureBatch,
    rank: Option<usize>,
) -> Result<(FeatureBatch, FeatureBatch), FeatureError> {
    let d = train.dim;
    if test.dim != d {
        return Err(FeatureError::DimensionMismatch { got: test.dim, want: d });
    }
    let rank = rank.unwrap_or(d);
    if rank > d {
        return Err(FeatureError::RankTooLarge { rank, d });
    }

    // Gram = XᵀX over training rows (upper triangle, mirrored).
    let mut gram = vec![0.0; d * d];
    for r in 0..train.count {
        let row = train.row(r);
        for i in 0..d {
            let xi = row[i] as f64;
            for j in i..d {
                gram[i * d + j] += xi * row[j] as f64;
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            gram[i * d + j] = gram[j * d + i];
        }
    }
    let eig = sym_eigen(&DenseMatrix::from_data(d, d, gram), EIGEN_TOL)?;

    // Leading `rank` eigenvectors; columns past the effective rank zeroed.
    let cutoff = eig.values[0].max(0.0) * RANK_TOL;
    let mut basis = DenseMatrix::zeros(d, rank);
    for c in 0..rank {
        if eig.values[c] > cutoff {
            for r in 0..d {
                basis.set(r, c, eig.vectors.get(r, c));
            }
        }
    }

    let train_proj = project(train, &basis);
    let (mins, maxs) = fit_minmax(&train_proj, rank);
    let prov = FeatureProvenance::Svd { basis, mins: mins.clone(), maxs: maxs.clone() };
    let train_fb = FeatureBatch {
        count: train.count,
        dim: rank,
        m: 256,
        values: quantize_responses(&train_proj, rank, &mins, &maxs),
        provenance: prov.clone(),
    };
    let test_fb = apply_svd(&prov, test)?;
    Ok((train_fb, test_fb))
}

/// Replay a fitted svd transform on a new feature batch.
pub fn apply_svd(prov: &FeatureProvenance, batch: &FeatureBatch) -> Result<FeatureBatch, FeatureError> {
    let FeatureProvenance::Svd { basis, mins, maxs } = prov else {
        return Err(FeatureError::WrongProvenance);
    };
    if batch.dim != basis.rows() {
        return Err(FeatureError::DimensionMismatch { got: batch.dim, want: basis.rows() });
    }
    let rank = basis.cols();
    let proj = project(batch, basis);
    Ok(FeatureBatch {
        count: batch.count,
        dim: rank,
        m: 256,
        values: quantize_responses(&proj, rank, mins, maxs),
        provenance: prov.clone(),
    })
}
