//! File formats: IDX image/label ingestion, model persistence, PGM export,
//! and the results CSV.
//!
//! The model format is little-endian with a fixed layout — no compression,
//! no varints — so files are easy to inspect with `xxd` and the loader is a
//! straight-line reader. A model file always carries full encoder
//! provenance (kernel, permutation family, hypervector seed, fitted feature
//! transform), so loading one is enough to rebuild the exact encoder and
//! reproduce its predictions bit for bit. IDX files keep their original
//! big-endian headers.

use std::fs;
use std::io;
use std::path::Path;

use laplace_hdc::classifiers::Representatives;
use laplace_hdc::features::{FeatureProvenance, HaarFilterBank, ImageBatch};
use laplace_hdc::kernel::{ExponentConvention, KernelSpec};
use laplace_hdc::numerics::DenseMatrix;
use laplace_hdc::{ClassModel, ClassifierKind, ModelProvenance, PackedHypervector, PermutationFamily};
use thiserror::Error;

const MODEL_MAGIC: &[u8; 4] = b"LHDC";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: not an idx file (header bytes {got:02x?})")]
    BadMagic { path: String, got: [u8; 4] },
    #[error("{path}: truncated: expected {needed} bytes, file holds {got}")]
    Truncated { path: String, needed: usize, got: usize },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("{path}: images are {rows}×{cols}; only square images are supported")]
    NotSquare { path: String, rows: usize, cols: usize },
    #[error("not a model file (bad magic)")]
    BadModelMagic,
    #[error("unsupported model format version {got}")]
    BadModelVersion { got: u32 },
    #[error("corrupt model file: {what}")]
    CorruptModel { what: &'static str },
    #[error("model rebuild rejected: {0}")]
    Rebuild(String),
    #[error("grid holds {got} values, {want} expected")]
    BadGrid { got: usize, want: usize },
}

fn read_file(path: &Path) -> Result<Vec<u8>, DataError> {
    fs::read(path).map_err(|source| DataError::Io { path: path.display().to_string(), source })
}

/// Big-endian cursor over an IDX byte buffer.
struct IdxReader<'a> {
    path: &'a Path,
    buf: &'a [u8],
    pos: usize,
}

impl<'a> IdxReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DataError> {
        if self.buf.len() - self.pos < n {
            return Err(DataError::Truncated {
                path: self.path.display().to_string(),
                needed: self.pos + n,
                got: self.buf.len(),
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32_be(&mut self) -> Result<u32, DataError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Parse one IDX file, requiring the unsigned-byte type code (0x08) and the
/// given rank (3 for image files, 1 for label files). Returns the dimension
/// sizes and the payload.
fn parse_idx(path: &Path, rank: u8) -> Result<(Vec<usize>, Vec<u8>), DataError> {
    let buf = read_file(path)?;
    let mut r = IdxReader { path, buf: &buf, pos: 0 };
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if magic[0] != 0 || magic[1] != 0 || magic[2] != 0x08 || magic[3] != rank {
        return Err(DataError::BadMagic { path: path.display().to_string(), got: magic });
    }
    let mut dims = Vec::with_capacity(rank as usize);
    for _ in 0..rank {
        dims.push(r.u32_be()? as usize);
    }
    let len: usize = dims.iter().product();
    let payload = r.take(len)?.to_vec();
    Ok((dims, payload))
}

/// Load an image/label file pair. Labels come back shifted to 1-based dense
/// class ids (byte b ↦ b+1), the convention the classifiers expect.
pub fn load_idx(images: &Path, labels: &Path) -> Result<(ImageBatch, Vec<u16>), DataError> {
    let (idims, pixels) = parse_idx(images, 3)?;
    let (rows, cols) = (idims[1], idims[2]);
    if rows != cols {
        return Err(DataError::NotSquare { path: images.display().to_string(), rows, cols });
    }
    let batch = ImageBatch::new(idims[0], rows, pixels)
        .map_err(|e| DataError::Rebuild(e.to_string()))?;
    let (ldims, bytes) = parse_idx(labels, 1)?;
    if ldims[0] != batch.count() {
        return Err(DataError::CountMismatch { images: batch.count(), labels: ldims[0] });
    }
    let ids = bytes.iter().map(|&b| b as u16 + 1).collect();
    Ok((batch, ids))
}

// ---------------------------------------------------------------- model io

struct ModelWriter {
    buf: Vec<u8>,
}

impl ModelWriter {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64_slice(&mut self, vs: &[f64]) {
        self.u64(vs.len() as u64);
        for &v in vs {
            self.f64(v);
        }
    }
}

struct ModelReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ModelReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DataError> {
        if self.buf.len() - self.pos < n {
            return Err(DataError::CorruptModel { what: "file ends mid-field" });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8, DataError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, DataError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, DataError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize, DataError> {
        usize::try_from(self.u64()?).map_err(|_| DataError::CorruptModel { what: "length overflows usize" })
    }
    fn f64(&mut self) -> Result<f64, DataError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64_vec(&mut self) -> Result<Vec<f64>, DataError> {
        let len = self.usize()?;
        // Bound before allocating: each element needs 8 bytes of file.
        if self.buf.len() - self.pos < len.saturating_mul(8) {
            return Err(DataError::CorruptModel { what: "float array longer than file" });
        }
        (0..len).map(|_| self.f64()).collect()
    }
}

fn kind_tag(kind: ClassifierKind) -> u8 {
    match kind {
        ClassifierKind::MajorityBinary => 0,
        ClassifierKind::MajorityFloat => 1,
        ClassifierKind::SgdFloat => 2,
        ClassifierKind::SgdBinary => 3,
    }
}

fn kind_from_tag(tag: u8) -> Result<ClassifierKind, DataError> {
    Ok(match tag {
        0 => ClassifierKind::MajorityBinary,
        1 => ClassifierKind::MajorityFloat,
        2 => ClassifierKind::SgdFloat,
        3 => ClassifierKind::SgdBinary,
        _ => return Err(DataError::CorruptModel { what: "unknown classifier kind" }),
    })
}

fn write_provenance(w: &mut ModelWriter, prov: &ModelProvenance) {
    let ks = &prov.kernel;
    w.f64(ks.alpha);
    w.f64(ks.lambda);
    w.u64(ks.m as u64);
    w.u8(match ks.convention {
        ExponentConvention::LambdaSquared => 0,
        ExponentConvention::Lambda => 1,
    });
    let (tag, a, b) = match prov.family {
        PermutationFamily::Cyclic1d { d, n } => (0u8, d, n),
        PermutationFamily::Block1d { d, block_len } => (1, d, block_len),
        PermutationFamily::Cyclic2d { image_side, torus_side } => (2, image_side, torus_side),
        PermutationFamily::Block2d { image_side, copies } => (3, image_side, copies),
    };
    w.u8(tag);
    w.u64(a as u64);
    w.u64(b as u64);
    w.u64(prov.hv_seed);
    match &prov.features {
        FeatureProvenance::Raw { side } => {
            w.u8(0);
            w.u64(*side as u64);
        }
        FeatureProvenance::Haar { side, bank, mins, maxs } => {
            w.u8(1);
            w.u64(*side as u64);
            w.u64(bank.stride() as u64);
            w.f64_slice(bank.coeffs());
            w.f64_slice(mins);
            w.f64_slice(maxs);
        }
        FeatureProvenance::Svd { basis, mins, maxs } => {
            w.u8(2);
            w.u64(basis.rows() as u64);
            w.u64(basis.cols() as u64);
            w.f64_slice(basis.data());
            w.f64_slice(mins);
            w.f64_slice(maxs);
        }
    }
}

fn read_provenance(r: &mut ModelReader) -> Result<ModelProvenance, DataError> {
    let alpha = r.f64()?;
    let lambda = r.f64()?;
    let m = r.usize()?;
    let convention = match r.u8()? {
        0 => ExponentConvention::LambdaSquared,
        1 => ExponentConvention::Lambda,
        _ => return Err(DataError::CorruptModel { what: "unknown exponent convention" }),
    };
    let kernel = KernelSpec { alpha, lambda, m, convention };
    let (tag, a, b) = (r.u8()?, r.usize()?, r.usize()?);
    let family = match tag {
        0 => PermutationFamily::cyclic_1d(a, b),
        1 => PermutationFamily::block_1d(a, b),
        2 => PermutationFamily::cyclic_2d(a, b),
        3 => PermutationFamily::block_2d(a, b),
        _ => return Err(DataError::CorruptModel { what: "unknown permutation family" }),
    }
    .map_err(|e| DataError::Rebuild(e.to_string()))?;
    let hv_seed = r.u64()?;
    let features = match r.u8()? {
        0 => FeatureProvenance::Raw { side: r.usize()? },
        1 => {
            let side = r.usize()?;
            let stride = r.usize()?;
            let coeffs = r.f64_vec()?;
            let bank = HaarFilterBank::new(coeffs, stride)
                .map_err(|e| DataError::Rebuild(e.to_string()))?;
            FeatureProvenance::Haar { side, bank, mins: r.f64_vec()?, maxs: r.f64_vec()? }
        }
        2 => {
            let rows = r.usize()?;
            let cols = r.usize()?;
            let data = r.f64_vec()?;
            if data.len() != rows * cols {
                return Err(DataError::CorruptModel { what: "basis shape mismatch" });
            }
            let basis = DenseMatrix::from_data(rows, cols, data);
            FeatureProvenance::Svd { basis, mins: r.f64_vec()?, maxs: r.f64_vec()? }
        }
        _ => return Err(DataError::CorruptModel { what: "unknown feature transform" }),
    };
    Ok(ModelProvenance { kernel, family, hv_seed, features })
}

/// Persist a trained model. The model must carry provenance — a model file
/// that cannot rebuild its encoder would be unusable for inference.
pub fn save_model(path: &Path, model: &ClassModel) -> Result<(), DataError> {
    let prov = model
        .provenance()
        .ok_or(DataError::CorruptModel { what: "model carries no encoder provenance" })?;
    let mut w = ModelWriter { buf: Vec::new() };
    w.buf.extend_from_slice(MODEL_MAGIC);
    w.u32(MODEL_VERSION);
    w.u8(kind_tag(model.kind()));
    w.u32(model.class_count() as u32);
    w.u64(model.n() as u64);
    write_provenance(&mut w, prov);
    match model.representatives() {
        Representatives::Binary(vs) => {
            w.u8(0);
            for v in vs {
                w.u64(v.words().len() as u64);
                for &word in v.words() {
                    w.u64(word);
                }
            }
        }
        Representatives::Float { n: _, weights } => {
            w.u8(1);
            w.f64_slice(weights);
        }
    }
    fs::write(path, &w.buf).map_err(|source| DataError::Io { path: path.display().to_string(), source })
}

/// Load a model saved by [`save_model`]; the round trip is bit-exact.
pub fn load_model(path: &Path) -> Result<ClassModel, DataError> {
    let buf = read_file(path)?;
    let mut r = ModelReader { buf: &buf, pos: 0 };
    if r.take(4)? != MODEL_MAGIC {
        return Err(DataError::BadModelMagic);
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(DataError::BadModelVersion { got: version });
    }
    let kind = kind_from_tag(r.u8()?)?;
    let class_count = r.u32()? as usize;
    let n = r.usize()?;
    let prov = read_provenance(&mut r)?;
    let reps = match r.u8()? {
        0 => {
            let mut vs = Vec::with_capacity(class_count);
            for _ in 0..class_count {
                let wc = r.usize()?;
                if words_needed(n) != wc {
                    return Err(DataError::CorruptModel { what: "word count does not match n" });
                }
                let words = (0..wc).map(|_| r.u64()).collect::<Result<Vec<u64>, _>>()?;
                vs.push(
                    PackedHypervector::from_words(n, words)
                        .map_err(|e| DataError::Rebuild(e.to_string()))?,
                );
            }
            Representatives::Binary(vs)
        }
        1 => Representatives::Float { n, weights: r.f64_vec()? },
        _ => return Err(DataError::CorruptModel { what: "unknown representative encoding" }),
    };
    if r.pos != buf.len() {
        return Err(DataError::CorruptModel { what: "trailing bytes after representatives" });
    }
    let model = ClassModel::from_parts(kind, reps, Some(prov))
        .map_err(|e| DataError::Rebuild(e.to_string()))?;
    if model.class_count() != class_count || model.n() != n {
        return Err(DataError::CorruptModel { what: "header shape disagrees with payload" });
    }
    Ok(model)
}

fn words_needed(n: usize) -> usize {
    n.div_ceil(64)
}

// --------------------------------------------------------------------- pgm

fn write_pgm(path: &Path, width: usize, height: usize, bytes: &[u8]) -> Result<(), DataError> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(bytes);
    fs::write(path, &out).map_err(|source| DataError::Io { path: path.display().to_string(), source })
}

/// Export a ±1 grid as binary PGM: −1 ↦ 0 (black), +1 ↦ 255 (white).
pub fn export_signs_pgm(path: &Path, width: usize, height: usize, signs: &[i8]) -> Result<(), DataError> {
    if signs.len() != width * height {
        return Err(DataError::BadGrid { got: signs.len(), want: width * height });
    }
    let bytes: Vec<u8> = signs.iter().map(|&s| if s < 0 { 0 } else { 255 }).collect();
    write_pgm(path, width, height, &bytes)
}

/// Export a float grid as binary PGM, min-max mapped onto 0..=255; a
/// constant grid maps to mid-gray.
pub fn export_float_pgm(path: &Path, width: usize, height: usize, values: &[f64]) -> Result<(), DataError> {
    if values.len() != width * height {
        return Err(DataError::BadGrid { got: values.len(), want: width * height });
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let bytes: Vec<u8> = if hi > lo {
        values.iter().map(|&v| ((v - lo) / (hi - lo) * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8).collect()
    } else {
        vec![128; values.len()]
    };
    write_pgm(path, width, height, &bytes)
}

// --------------------------------------------------------------------- csv

/// One result line: a single (repetition, dataset, encoder, classifier) run.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub run: usize,
    pub seed: u64,
    pub dataset: String,
    pub encoder: String,
    pub classifier: String,
    pub accuracy: f64,
    /// None when timing is disabled; the field is then left empty, which
    /// keeps re-runs byte-identical.
    pub runtime_s: Option<f64>,
}

/// Assemble the results CSV. The header is fixed; accuracy uses the shortest
/// round-trip float form, runtime three decimals.
pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from("run,seed,dataset,encoder,classifier,accuracy,runtime_s\n");
    for r in rows {
        let runtime = match r.runtime_s {
            Some(t) => format!("{t:.3}"),
            None => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.run, r.seed, r.dataset, r.encoder, r.classifier, r.accuracy, runtime
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use laplace_hdc::rng::SplitMix64;
    use laplace_hdc::{predict, train_majority};
    use tempfile::tempdir;

    fn idx_images(count: u32, side: u32, pixels: &[u8]) -> Vec<u8> {
        let mut buf = vec![0, 0, 8, 3];
        buf.extend_from_slice(&count.to_be_bytes());
        buf.extend_from_slice(&side.to_be_bytes());
        buf.extend_from_slice(&side.to_be_bytes());
        buf.extend_from_slice(pixels);
        buf
    }

    fn idx_labels(count: u32, labels: &[u8]) -> Vec<u8> {
        let mut buf = vec![0, 0, 8, 1];
        buf.extend_from_slice(&count.to_be_bytes());
        buf.extend_from_slice(labels);
        buf
    }

    #[test]
    fn idx_pair_round_trips_pixels_and_shifts_labels() {
        let dir = tempdir().unwrap();
        let ip = dir.path().join("img");
        let lp = dir.path().join("lbl");
        fs::write(&ip, idx_images(2, 2, &[1, 2, 3, 4, 9, 8, 7, 6])).unwrap();
        fs::write(&lp, idx_labels(2, &[0, 7])).unwrap();
        let (batch, ids) = load_idx(&ip, &lp).unwrap();
        assert_eq!(batch.count(), 2);
        assert_eq!(batch.side(), 2);
        assert_eq!(batch.image(0), &[1, 2, 3, 4]);
        assert_eq!(batch.image(1), &[9, 8, 7, 6]);
        assert_eq!(ids, vec![1, 8]);
    }

    #[test]
    fn four_byte_file_is_truncated_not_bad_magic() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("short");
        fs::write(&p, [0u8, 0, 8, 3]).unwrap();
        let err = parse_idx(&p, 3).unwrap_err();
        assert!(matches!(err, DataError::Truncated { needed: 8, got: 4, .. }), "{err}");
    }

    #[test]
    fn wrong_type_code_or_rank_is_bad_magic() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("bad");
        fs::write(&p, [0u8, 0, 9, 3, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1]).unwrap();
        assert!(matches!(parse_idx(&p, 3).unwrap_err(), DataError::BadMagic { .. }));
        // An images file opened as labels fails on rank, not on a later field.
        fs::write(&p, idx_images(1, 1, &[5])).unwrap();
        assert!(matches!(parse_idx(&p, 1).unwrap_err(), DataError::BadMagic { .. }));
    }

    #[test]
    fn short_payload_is_truncated() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("short-payload");
        fs::write(&p, idx_images(2, 2, &[1, 2, 3])).unwrap();
        let err = parse_idx(&p, 3).unwrap_err();
        assert!(matches!(err, DataError::Truncated { needed: 24, got: 19, .. }), "{err}");
    }

    #[test]
    fn label_count_mismatch_is_reported() {
        let dir = tempdir().unwrap();
        let ip = dir.path().join("img");
        let lp = dir.path().join("lbl");
        fs::write(&ip, idx_images(2, 1, &[1, 2])).unwrap();
        fs::write(&lp, idx_labels(3, &[0, 1, 2])).unwrap();
        let err = load_idx(&ip, &lp).unwrap_err();
        assert!(matches!(err, DataError::CountMismatch { images: 2, labels: 3 }));
    }

    #[test]
    fn non_square_images_are_rejected() {
        let dir = tempdir().unwrap();
        let ip = dir.path().join("img");
        let lp = dir.path().join("lbl");
        let mut buf = vec![0, 0, 8, 3];
        buf.extend_from_slice(&1u32.to_be_bytes());
        buf.extend_from_slice(&2u32.to_be_bytes());
        buf.extend_from_slice(&3u32.to_be_bytes());
        buf.extend_from_slice(&[0; 6]);
        fs::write(&ip, buf).unwrap();
        fs::write(&lp, idx_labels(1, &[0])).unwrap();
        assert!(matches!(load_idx(&ip, &lp).unwrap_err(), DataError::NotSquare { rows: 2, cols: 3, .. }));
    }

    /// A small but fully populated model: binary majority over random ±1
    /// encodings, with Haar provenance exercising the fitted-parameter path.
    fn sample_model(binary: bool) -> ClassModel {
        let mut rng = SplitMix64::new(11);
        let n = 130; // forces a ragged last word
        let encoded: Vec<PackedHypervector> = (0..12)
            .map(|_| {
                let signs: Vec<i8> =
                    (0..n).map(|_| if rng.next_u64() & 1 == 0 { 1 } else { -1 }).collect();
                PackedHypervector::from_signs(&signs)
            })
            .collect();
        let labels: Vec<u16> = (0..12).map(|i| (i % 3) as u16 + 1).collect();
        let model = train_majority(&encoded, &labels, binary).unwrap();
        let bank = HaarFilterBank::haar_walsh(4);
        let prov = ModelProvenance {
            kernel: KernelSpec::new(1.0, 0.0375, 256),
            family: PermutationFamily::cyclic_1d(9, n).unwrap(),
            hv_seed: 7,
            features: FeatureProvenance::Haar {
                side: 8,
                bank,
                mins: vec![0.5; 9],
                maxs: vec![3.25; 9],
            },
        };
        model.with_provenance(prov)
    }

    #[test]
    fn model_round_trip_is_bit_exact_and_predicts_identically() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.lhdc");
        for binary in [true, false] {
            let model = sample_model(binary);
            save_model(&path, &model).unwrap();
            let loaded = load_model(&path).unwrap();
            assert_eq!(loaded.kind(), model.kind());
            assert_eq!(loaded.class_count(), model.class_count());
            assert_eq!(loaded.n(), model.n());
            let (p0, p1) = (model.provenance().unwrap(), loaded.provenance().unwrap());
            assert_eq!(p0.kernel, p1.kernel);
            assert_eq!(p0.family, p1.family);
            assert_eq!(p0.hv_seed, p1.hv_seed);
            // Saving the loaded model again must produce identical bytes.
            let bytes = fs::read(&path).unwrap();
            let path2 = dir.path().join("model2.lhdc");
            save_model(&path2, &loaded).unwrap();
            assert_eq!(bytes, fs::read(&path2).unwrap());
            // And identical predictions over random probes.
            let mut rng = SplitMix64::new(99);
            for _ in 0..200 {
                let signs: Vec<i8> =
                    (0..model.n()).map(|_| if rng.next_u64() & 1 == 0 { 1 } else { -1 }).collect();
                let psi = PackedHypervector::from_signs(&signs);
                assert_eq!(predict(&model, &psi).unwrap(), predict(&loaded, &psi).unwrap());
            }
        }
    }

    #[test]
    fn model_loader_rejects_damage() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.lhdc");
        save_model(&path, &sample_model(true)).unwrap();
        let good = fs::read(&path).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        fs::write(&path, &bad).unwrap();
        assert!(matches!(load_model(&path).unwrap_err(), DataError::BadModelMagic));

        let mut bad = good.clone();
        bad[4] = 2;
        fs::write(&path, &bad).unwrap();
        assert!(matches!(load_model(&path).unwrap_err(), DataError::BadModelVersion { got: 2 }));

        // Cut mid-representatives.
        fs::write(&path, &good[..good.len() - 5]).unwrap();
        assert!(matches!(load_model(&path).unwrap_err(), DataError::CorruptModel { .. }));

        // Trailing garbage is not silently ignored.
        let mut bad = good.clone();
        bad.push(0);
        fs::write(&path, &bad).unwrap();
        assert!(matches!(load_model(&path).unwrap_err(), DataError::CorruptModel { .. }));
    }

    #[test]
    fn save_requires_provenance() {
        let dir = tempdir().unwrap();
        let encoded = vec![PackedHypervector::ones(8), PackedHypervector::ones(8)];
        let bare = train_majority(&encoded, &[1, 2], true).unwrap();
        assert!(save_model(&dir.path().join("m"), &bare).is_err());
    }

    #[test]
    fn sign_pgm_payload_is_pinned() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("s.pgm");
        export_signs_pgm(&p, 2, 2, &[-1, 1, 1, -1]).unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"P5\n2 2\n255\n\x00\xff\xff\x00");
        assert!(matches!(
            export_signs_pgm(&p, 2, 2, &[1; 3]).unwrap_err(),
            DataError::BadGrid { got: 3, want: 4 }
        ));
    }

    #[test]
    fn float_pgm_maps_extremes_and_constants() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("f.pgm");
        export_float_pgm(&p, 3, 1, &[-2.0, 0.0, 2.0]).unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"P5\n3 1\n255\n\x00\x80\xff");
        export_float_pgm(&p, 2, 1, &[0.7, 0.7]).unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"P5\n2 1\n255\n\x80\x80");
    }

    #[test]
    fn results_csv_layout_is_pinned() {
        let rows = vec![
            ResultRow {
                run: 1,
                seed: 42,
                dataset: "mnist".into(),
                encoder: "cyclic1d-n10000".into(),
                classifier: "sgd-float".into(),
                accuracy: 0.9475,
                runtime_s: Some(12.3456),
            },
            ResultRow {
                run: 2,
                seed: 43,
                dataset: "mnist".into(),
                encoder: "cyclic1d-n10000".into(),
                classifier: "sgd-float".into(),
                accuracy: 0.95,
                runtime_s: None,
            },
        ];
        let csv = results_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "run,seed,dataset,encoder,classifier,accuracy,runtime_s");
        assert_eq!(lines.next().unwrap(), "1,42,mnist,cyclic1d-n10000,sgd-float,0.9475,12.346");
        assert_eq!(lines.next().unwrap(), "2,43,mnist,cyclic1d-n10000,sgd-float,0.95,");
        assert!(lines.next().is_none());
    }

    #[test]
    fn staged_mnist_parses_when_present() {
        let images = Path::new("../../data/mnist/train-images-idx3-ubyte");
        let labels = Path::new("../../data/mnist/train-labels-idx1-ubyte");
        if !images.exists() {
            eprintln!("skipping: dataset not staged (run scripts/fetch_data.py)");
            return;
        }
        let (batch, ids) = load_idx(images, labels).unwrap();
        assert_eq!(batch.count(), 60000);
        assert_eq!(batch.side(), 28);
        assert!(ids.iter().all(|&id| (1..=10).contains(&id)));
    }
}
