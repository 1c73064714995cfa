//! End-to-end pipelines behind the CLI subcommands: train/evaluate runs,
//! test-time corruption sweeps, hypervector visualization, throughput
//! benchmarks, and the statistical verification report.
//!
//! Every random choice derives from the master seed: repetition r uses
//! mix(seed, r), and each consumer within a repetition (bandwidth sampling,
//! hypervector draw, SGD shuffling, test-time flips) gets its own stream
//! off that. Re-running a config reproduces every number; with timing
//! disabled the output files are byte-identical.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use laplace_hdc::classifiers::SgdOutcome;
use laplace_hdc::features::{apply_haar, apply_svd, FeatureError};
use laplace_hdc::rng::{mix, SplitMix64};
use laplace_hdc::verify::{ReportRow, ShiftCheck};
use laplace_hdc::{
    bandwidth_from_data, build_kernel, encode_batch, equivariance_check, flip_bits,
    generate_hypervectors, haar_features, mc_similarity, predict, quantize_raw, schoenberg_scan,
    svd_features, train_majority, train_sgd, ClassModel, ClassifierKind, EncoderConfig,
    FeatureBatch, HaarFilterBank, ImageBatch, KernelSpec, ModelProvenance, PackedHypervector,
    PermutationFamily, SgdParams,
};

use crate::config::{FamilyKind, FeatureMode, RunConfig, TimingMode};
use crate::dataio::{
    export_float_pgm, export_signs_pgm, load_idx, load_model, results_csv, save_model, ResultRow,
};

// Per-repetition seed streams; the repetition seed itself is mix(master, run).
const STREAM_BANDWIDTH: u64 = 1;
const STREAM_HYPERVECTORS: u64 = 2;
const STREAM_SGD: u64 = 3;
const STREAM_FLIPS: u64 = 4;

#[derive(Debug)]
pub enum PipelineError {
    /// The configuration cannot describe a runnable pipeline (exit 2).
    Config(String),
    /// A pipeline stage failed (exit 1).
    Stage { stage: &'static str, message: String },
}

impl Display for PipelineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PipelineError::Config(msg) => write!(f, "config error: {msg}"),
            PipelineError::Stage { stage, message } => write!(f, "stage {stage}: {message}"),
        }
    }
}

impl std::error::Error for PipelineError {}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Stage { .. } => 1,
        }
    }
}

fn stage<E: Display>(stage: &'static str) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::Stage { stage, message: e.to_string() }
}

// ------------------------------------------------------------ preparation

/// Featurized train/test split, ready for encoding.
pub struct Prepared {
    pub train: FeatureBatch,
    pub test: FeatureBatch,
    pub train_labels: Vec<u16>,
    pub test_labels: Vec<u16>,
}

fn subset_images(images: &ImageBatch, labels: &[u16], k: usize) -> (ImageBatch, Vec<u16>) {
    let k = k.min(images.count());
    let mut pixels = Vec::with_capacity(k * images.side() * images.side());
    for i in 0..k {
        pixels.extend_from_slice(images.image(i));
    }
    let batch = ImageBatch::new(k, images.side(), pixels).expect("prefix keeps batch shape");
    (batch, labels[..k].to_vec())
}

/// Load both IDX pairs, cut optional subsets, and run the configured
/// feature pipeline (fitted on training data only).
pub fn load_and_featurize(cfg: &RunConfig) -> Result<Prepared, PipelineError> {
    let (mut train_images, mut train_labels) =
        load_idx(&cfg.train_images, &cfg.train_labels).map_err(stage("load-data"))?;
    let (mut test_images, mut test_labels) =
        load_idx(&cfg.test_images, &cfg.test_labels).map_err(stage("load-data"))?;
    if let Some(k) = cfg.subset {
        (train_images, train_labels) = subset_images(&train_images, &train_labels, k);
    }
    if let Some(k) = cfg.test_subset {
        (test_images, test_labels) = subset_images(&test_images, &test_labels, k);
    }
    let err = stage::<FeatureError>("features");
    let (train, test) = match cfg.features {
        FeatureMode::Raw => (quantize_raw(&train_images), quantize_raw(&test_images)),
        FeatureMode::Haar => {
            let bank = HaarFilterBank::haar_walsh(cfg.haar_stride);
            haar_features(&train_images, &test_images, &bank).map_err(err)?
        }
        FeatureMode::Svd => {
            let raw_train = quantize_raw(&train_images);
            let raw_test = quantize_raw(&test_images);
            svd_features(&raw_train, &raw_test, cfg.svd_rank).map_err(err)?
        }
    };
    Ok(Prepared { train, test, train_labels, test_labels })
}

/// Pick the family instance for a feature dimension under the length
/// budget: the cyclic family uses the budget directly, the others round it
/// down to the nearest multiple their structure demands.
pub fn choose_family(kind: FamilyKind, d: usize, n_cap: usize) -> Result<PermutationFamily, PipelineError> {
    let cfg_err = |msg: String| PipelineError::Config(msg);
    let square_side = || {
        let side = d.isqrt();
        if side * side == d {
            Ok(side)
        } else {
            Err(cfg_err(format!("{} needs a square feature dimension, got {d}", kind.label())))
        }
    };
    let family = match kind {
        FamilyKind::Cyclic1d => PermutationFamily::cyclic_1d(d, n_cap),
        FamilyKind::Block1d => {
            let block_len = n_cap / d;
            if block_len == 0 {
                return Err(cfg_err(format!("n-cap {n_cap} is below the feature dimension {d}")));
            }
            PermutationFamily::block_1d(d, block_len)
        }
        FamilyKind::Cyclic2d => {
            let side = square_side()?;
            let torus = n_cap.isqrt();
            if torus < side {
                return Err(cfg_err(format!(
                    "n-cap {n_cap} gives a {torus}×{torus} torus, smaller than the {side}×{side} image"
                )));
            }
            PermutationFamily::cyclic_2d(side, torus)
        }
        FamilyKind::Block2d => {
            let side = square_side()?;
            let copies = n_cap / d;
            if copies == 0 {
                return Err(cfg_err(format!("n-cap {n_cap} is below the feature dimension {d}")));
            }
            PermutationFamily::block_2d(side, copies)
        }
    };
    family.map_err(|e| cfg_err(e.to_string()))
}

// --------------------------------------------------------------- training

/// One trained repetition, with everything later stages need.
pub struct TrainedRep {
    pub run: usize,
    pub rep_seed: u64,
    pub model: ClassModel,
    pub encoder: EncoderConfig,
    pub encoder_label: String,
    pub test_encoded: Vec<PackedHypervector>,
    pub accuracy: f64,
    /// Mean per-epoch cross-entropy (SGD classifiers only).
    pub epoch_loss: Vec<f64>,
}

fn predict_accuracy(
    model: &ClassModel,
    encoded: &[PackedHypervector],
    labels: &[u16],
) -> Result<f64, PipelineError> {
    let mut correct = 0usize;
    for (psi, &label) in encoded.iter().zip(labels) {
        if predict(model, psi).map_err(stage("evaluate"))? == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / labels.len().max(1) as f64)
}

/// Run one repetition: fit the bandwidth, draw hypervectors, encode both
/// splits, train the configured classifier, and score the test split.
pub fn train_once(cfg: &RunConfig, data: &Prepared, run: usize) -> Result<TrainedRep, PipelineError> {
    let rep_seed = mix(cfg.seed, run as u64);
    let lambda = bandwidth_from_data(
        &data.train.values,
        data.train.dim,
        1.0,
        cfg.bandwidth_c,
        cfg.bandwidth_samples,
        mix(rep_seed, STREAM_BANDWIDTH),
    )
    .map_err(stage("bandwidth"))?;
    let spec = KernelSpec::new(1.0, lambda, data.train.m);
    let km = build_kernel(&spec).map_err(stage("kernel"))?;
    let family = choose_family(cfg.family, data.train.dim, cfg.n_cap)?;
    let hv_seed = mix(rep_seed, STREAM_HYPERVECTORS);
    let hv = generate_hypervectors(&km, family.n(), hv_seed).map_err(stage("hypervectors"))?;
    let encoder = EncoderConfig::new(hv, family.clone()).map_err(stage("encoder"))?;
    let encoder_label = format!("{}-n{}", cfg.family.label(), family.n());

    let train_encoded = encode_batch(&encoder, &data.train).map_err(stage("encode"))?;
    let binary = cfg.classifier.is_binary();
    let (model, epoch_loss) = if cfg.classifier.is_sgd() {
        let params = SgdParams {
            learning_rate: cfg.learning_rate,
            epochs: cfg.epochs,
            batch_size: cfg.batch_size,
            seed: mix(rep_seed, STREAM_SGD),
            clamp_per_epoch: cfg.clamp_per_epoch,
        };
        let SgdOutcome { model, epoch_loss } =
            train_sgd(&train_encoded, &data.train_labels, binary, &params)
                .map_err(stage("train"))?;
        (model, epoch_loss)
    } else {
        let model =
            train_majority(&train_encoded, &data.train_labels, binary).map_err(stage("train"))?;
        (model, Vec::new())
    };
    drop(train_encoded);
    let model = model.with_provenance(ModelProvenance {
        kernel: spec,
        family,
        hv_seed,
        features: data.train.provenance.clone(),
    });

    let test_encoded = encode_batch(&encoder, &data.test).map_err(stage("encode"))?;
    let accuracy = predict_accuracy(&model, &test_encoded, &data.test_labels)?;
    Ok(TrainedRep { run, rep_seed, model, encoder, encoder_label, test_encoded, accuracy, epoch_loss })
}

// ------------------------------------------------------------- pipelines

pub struct PipelineSummary {
    pub rows: Vec<ResultRow>,
    pub csv: String,
    pub csv_path: PathBuf,
    pub model_path: Option<PathBuf>,
}

fn write_out(out_dir: &Path, name: &str, contents: &str) -> Result<PathBuf, PipelineError> {
    fs::create_dir_all(out_dir).map_err(stage("persist"))?;
    let path = out_dir.join(name);
    fs::write(&path, contents).map_err(stage("persist"))?;
    Ok(path)
}

fn runtime_field(timing: TimingMode, started: Instant) -> Option<f64> {
    match timing {
        TimingMode::Wall => Some(started.elapsed().as_secs_f64()),
        TimingMode::None => None,
    }
}

/// Train/evaluate for the configured number of repetitions; write the
/// results CSV and persist the last repetition's model.
pub fn run_pipeline(cfg: &RunConfig, model_out: Option<&Path>) -> Result<PipelineSummary, PipelineError> {
    let data = load_and_featurize(cfg)?;
    let mut rows = Vec::with_capacity(cfg.reps);
    let mut last: Option<TrainedRep> = None;
    for run in 1..=cfg.reps {
        let started = Instant::now();
        let rep = train_once(cfg, &data, run)?;
        eprintln!(
            "rep {run}/{}: accuracy {:.4} ({:.1} s)",
            cfg.reps,
            rep.accuracy,
            started.elapsed().as_secs_f64()
        );
        rows.push(ResultRow {
            run,
            seed: rep.rep_seed,
            dataset: cfg.dataset.clone(),
            encoder: rep.encoder_label.clone(),
            classifier: cfg.classifier.label().into(),
            accuracy: rep.accuracy,
            runtime_s: runtime_field(cfg.timing, started),
        });
        last = Some(rep);
    }
    let csv = results_csv(&rows);
    let csv_path = write_out(&cfg.out_dir, "results.csv", &csv)?;
    let model_path = match last {
        Some(rep) => {
            let path = model_out
                .map(PathBuf::from)
                .unwrap_or_else(|| cfg.out_dir.join("model.lhdc"));
            save_model(&path, &rep.model).map_err(stage("persist"))?;
            Some(path)
        }
        None => None,
    };
    Ok(PipelineSummary { rows, csv, csv_path, model_path })
}

/// Score a persisted model against the configured test split, rebuilding
/// the encoder from the model's provenance.
pub fn run_eval(cfg: &RunConfig, model_path: &Path) -> Result<PipelineSummary, PipelineError> {
    let model = load_model(model_path).map_err(stage("load-model"))?;
    let prov = model
        .provenance()
        .ok_or_else(|| PipelineError::Stage {
            stage: "load-model",
            message: "model carries no encoder provenance".into(),
        })?
        .clone();
    let (test_images, test_labels) =
        load_idx(&cfg.test_images, &cfg.test_labels).map_err(stage("load-data"))?;
    let (test_images, test_labels) = match cfg.test_subset {
        Some(k) => subset_images(&test_images, &test_labels, k),
        None => (test_images, test_labels),
    };
    let err = stage::<FeatureError>("features");
    let test = match &prov.features {
        laplace_hdc::FeatureProvenance::Raw { .. } => quantize_raw(&test_images),
        laplace_hdc::FeatureProvenance::Haar { .. } => apply_haar(&prov.features, &test_images).map_err(err)?,
        laplace_hdc::FeatureProvenance::Svd { .. } => {
            apply_svd(&prov.features, &quantize_raw(&test_images)).map_err(err)?
        }
    };
    let started = Instant::now();
    let km = build_kernel(&prov.kernel).map_err(stage("kernel"))?;
    let hv = generate_hypervectors(&km, model.n(), prov.hv_seed).map_err(stage("hypervectors"))?;
    let encoder = EncoderConfig::new(hv, prov.family.clone()).map_err(stage("encoder"))?;
    let encoded = encode_batch(&encoder, &test).map_err(stage("encode"))?;
    let accuracy = predict_accuracy(&model, &encoded, &test_labels)?;
    let kind_label = match model.kind() {
        ClassifierKind::MajorityBinary => "majority-binary",
        ClassifierKind::MajorityFloat => "majority-float",
        ClassifierKind::SgdFloat => "sgd-float",
        ClassifierKind::SgdBinary => "sgd-binary",
    };
    let family_label = match prov.family {
        PermutationFamily::Cyclic1d { .. } => "cyclic1d",
        PermutationFamily::Block1d { .. } => "block1d",
        PermutationFamily::Cyclic2d { .. } => "cyclic2d",
        PermutationFamily::Block2d { .. } => "block2d",
    };
    let rows = vec![ResultRow {
        run: 1,
        seed: prov.hv_seed,
        dataset: cfg.dataset.clone(),
        encoder: format!("{family_label}-n{}", model.n()),
        classifier: kind_label.into(),
        accuracy,
        runtime_s: runtime_field(cfg.timing, started),
    }];
    let csv = results_csv(&rows);
    let csv_path = write_out(&cfg.out_dir, "eval.csv", &csv)?;
    Ok(PipelineSummary { rows, csv, csv_path, model_path: Some(model_path.to_path_buf()) })
}

/// Train clean, then corrupt the test encodings with seeded bit flips at
/// each configured ratio and score every corruption level.
pub fn run_robustness(cfg: &RunConfig) -> Result<PipelineSummary, PipelineError> {
    let data = load_and_featurize(cfg)?;
    let mut rows = Vec::with_capacity(cfg.reps * cfg.flip_ratios.len());
    for run in 1..=cfg.reps {
        let started = Instant::now();
        let rep = train_once(cfg, &data, run)?;
        let n = rep.encoder.n();
        for &ratio in &cfg.flip_ratios {
            let k = (ratio * n as f64).round() as usize;
            // Keyed by the ratio value, not its list position, so a given
            // (rep, ratio) pair sees the same corruption no matter which
            // other ratios are requested alongside it.
            let flip_stream = mix(mix(rep.rep_seed, STREAM_FLIPS), ratio.to_bits());
            let mut correct = 0usize;
            for (i, psi) in rep.test_encoded.iter().enumerate() {
                let noisy = flip_bits(psi, k, mix(flip_stream, i as u64)).map_err(stage("flip"))?;
                if predict(&rep.model, &noisy).map_err(stage("evaluate"))? == data.test_labels[i] {
                    correct += 1;
                }
            }
            let accuracy = correct as f64 / data.test_labels.len().max(1) as f64;
            eprintln!("rep {run}/{}: flip {ratio}: accuracy {accuracy:.4}", cfg.reps);
            rows.push(ResultRow {
                run,
                seed: rep.rep_seed,
                dataset: cfg.dataset.clone(),
                encoder: format!("{}+flip{ratio}", rep.encoder_label),
                classifier: cfg.classifier.label().into(),
                accuracy,
                runtime_s: runtime_field(cfg.timing, started),
            });
        }
    }
    let csv = results_csv(&rows);
    let csv_path = write_out(&cfg.out_dir, "robustness.csv", &csv)?;
    Ok(PipelineSummary { rows, csv, csv_path, model_path: None })
}

/// Bind every chosen test encoding against a fixed reference encoding and
/// export the products as M×M images, plus per-class float averages. Only
/// the toroidal 2-d family lays hypervector positions out on a grid, so
/// that family is required.
pub fn run_visualize(
    cfg: &RunConfig,
    sample_ids: &[usize],
    reference: usize,
) -> Result<Vec<PathBuf>, PipelineError> {
    if cfg.family != FamilyKind::Cyclic2d {
        return Err(PipelineError::Config(
            "visualize needs --family cyclic2d (its positions form an M×M torus)".into(),
        ));
    }
    let data = load_and_featurize(cfg)?;
    let rep = train_once(cfg, &data, 1)?;
    let n = rep.encoder.n();
    let side = n.isqrt();
    let reference_psi = rep
        .test_encoded
        .get(reference)
        .ok_or_else(|| {
            PipelineError::Config(format!("reference id {reference} outside the test set"))
        })?
        .clone();
    fs::create_dir_all(&cfg.out_dir).map_err(stage("persist"))?;
    let mut written = Vec::new();
    for &id in sample_ids {
        let psi = rep.test_encoded.get(id).ok_or_else(|| {
            PipelineError::Config(format!("sample id {id} outside the test set"))
        })?;
        let bound = psi.bind(&reference_psi).map_err(stage("visualize"))?;
        let path = cfg.out_dir.join(format!("sample{id}_class{}.pgm", data.test_labels[id]));
        export_signs_pgm(&path, side, side, &bound.to_signs()).map_err(stage("persist"))?;
        written.push(path);
    }
    // Per-class averages of the bound products, rendered on the same grid.
    let classes = *data.test_labels.iter().max().unwrap_or(&0) as usize;
    let mut sums = vec![vec![0.0f64; n]; classes];
    let mut counts = vec![0usize; classes];
    for (psi, &label) in rep.test_encoded.iter().zip(&data.test_labels) {
        let bound = psi.bind(&reference_psi).map_err(stage("visualize"))?;
        let class = label as usize - 1;
        counts[class] += 1;
        for (slot, sign) in sums[class].iter_mut().zip(bound.to_signs()) {
            *slot += sign as f64;
        }
    }
    for (class, sum) in sums.iter_mut().enumerate() {
        if counts[class] == 0 {
            continue;
        }
        for v in sum.iter_mut() {
            *v /= counts[class] as f64;
        }
        let path = cfg.out_dir.join(format!("class{}_mean.pgm", class + 1));
        export_float_pgm(&path, side, side, sum).map_err(stage("persist"))?;
        written.push(path);
    }
    Ok(written)
}

// ------------------------------------------------------------------ bench

pub struct BenchReport {
    pub d: usize,
    pub n: usize,
    pub feature_s: f64,
    pub setup_s: f64,
    pub encode_per_s: f64,
    pub train_s: f64,
    pub predict_per_s: f64,
}

/// Time the pipeline stages on a training prefix: featurization, encoder
/// construction, encoding, training, prediction.
pub fn run_bench(cfg: &RunConfig, samples: usize) -> Result<BenchReport, PipelineError> {
    let t0 = Instant::now();
    let data = load_and_featurize(cfg)?;
    let feature_s = t0.elapsed().as_secs_f64();
    let k = samples.clamp(1, data.train.count);
    let batch = FeatureBatch {
        count: k,
        dim: data.train.dim,
        m: data.train.m,
        values: data.train.values[..k * data.train.dim].to_vec(),
        provenance: data.train.provenance.clone(),
    };
    let labels = &data.train_labels[..k];

    let rep_seed = mix(cfg.seed, 1);
    let t1 = Instant::now();
    let lambda = bandwidth_from_data(
        &batch.values,
        batch.dim,
        1.0,
        cfg.bandwidth_c,
        cfg.bandwidth_samples,
        mix(rep_seed, STREAM_BANDWIDTH),
    )
    .map_err(stage("bandwidth"))?;
    let km = build_kernel(&KernelSpec::new(1.0, lambda, batch.m)).map_err(stage("kernel"))?;
    let family = choose_family(cfg.family, batch.dim, cfg.n_cap)?;
    let hv = generate_hypervectors(&km, family.n(), mix(rep_seed, STREAM_HYPERVECTORS))
        .map_err(stage("hypervectors"))?;
    let encoder = EncoderConfig::new(hv, family).map_err(stage("encoder"))?;
    let setup_s = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let encoded = encode_batch(&encoder, &batch).map_err(stage("encode"))?;
    let encode_per_s = k as f64 / t2.elapsed().as_secs_f64().max(1e-9);

    let t3 = Instant::now();
    let binary = cfg.classifier.is_binary();
    let model = if cfg.classifier.is_sgd() {
        let params = SgdParams {
            learning_rate: cfg.learning_rate,
            epochs: cfg.epochs,
            batch_size: cfg.batch_size,
            seed: mix(rep_seed, STREAM_SGD),
            clamp_per_epoch: cfg.clamp_per_epoch,
        };
        train_sgd(&encoded, labels, binary, &params).map_err(stage("train"))?.model
    } else {
        train_majority(&encoded, labels, binary).map_err(stage("train"))?
    };
    let train_s = t3.elapsed().as_secs_f64();

    let t4 = Instant::now();
    for psi in &encoded {
        predict(&model, psi).map_err(stage("evaluate"))?;
    }
    let predict_per_s = k as f64 / t4.elapsed().as_secs_f64().max(1e-9);

    Ok(BenchReport {
        d: batch.dim,
        n: encoder.n(),
        feature_s,
        setup_s,
        encode_per_s,
        train_s,
        predict_per_s,
    })
}

// ----------------------------------------------------------- verification

/// Build the statistical verification report: covariance fidelity of the
/// hypervector draw, Monte-Carlo similarity mean/variance against theory,
/// the overlap-constant identity, positive-definiteness boundaries, the
/// small-bandwidth product-form approximation, and translation
/// equivariance of the 2-d families.
pub fn run_verify(trials: usize, mc_n: usize, seed: u64, out_dir: &Path) -> Result<(Vec<ReportRow>, PathBuf), PipelineError> {
    let mut rows = Vec::new();

    // Empirical column correlations vs the kernel, 4-sigma band per pair.
    {
        let km = build_kernel(&KernelSpec::new(1.0, 0.1, 8)).map_err(stage("verify"))?;
        let n = 100_000;
        let hv = generate_hypervectors(&km, n, mix(seed, 0x11)).map_err(stage("verify"))?;
        let mut worst = 0.0f64;
        for i in 0..8 {
            for j in (i + 1)..8 {
                let k = km.affinity(i as u16 + 1, j as u16 + 1);
                let band = 4.0 * ((1.0 - k * k) / n as f64).sqrt();
                let ratio = (hv.correlation(i, j) - k).abs() / band;
                worst = worst.max(ratio);
            }
        }
        rows.push(ReportRow {
            criterion: "covariance-fidelity".into(),
            predicted: 1.0,
            observed: worst,
            tolerance: 1.0,
            pass: worst <= 1.0,
        });
    }

    // Similarity statistics over hypervector redraws.
    {
        let km = build_kernel(&KernelSpec::new(1.0, 0.3, 8)).map_err(stage("verify"))?;
        let family = PermutationFamily::cyclic_1d(5, mc_n).map_err(stage("verify"))?;
        let mut rng = SplitMix64::new(mix(seed, 0x12));
        let x: Vec<u16> = (0..5).map(|_| rng.next_below(8) as u16 + 1).collect();
        let y: Vec<u16> = (0..5).map(|_| rng.next_below(8) as u16 + 1).collect();
        let est = mc_similarity(&x, &y, &km, &family, trials, mix(seed, 0x13))
            .map_err(stage("verify"))?;
        let se = (est.variance / est.trials as f64).sqrt();
        let mean_ratio = (est.mean - est.predicted).abs() / (4.0 * se).max(1e-300);
        rows.push(ReportRow {
            criterion: "similarity-mean".into(),
            predicted: 1.0,
            observed: mean_ratio,
            tolerance: 1.0,
            pass: mean_ratio <= 1.0,
        });
        let var_ratio = est.variance / est.variance_bound.max(1e-300);
        rows.push(ReportRow {
            criterion: "similarity-variance".into(),
            predicted: 1.0,
            observed: var_ratio,
            tolerance: 1.3,
            pass: var_ratio <= 1.3,
        });
    }

    // Overlap constant: the closed form for the cyclic family.
    {
        let mut worst = 0.0f64;
        for d in 1..=8usize {
            for n in (2 * d - 1)..=64 {
                let family = PermutationFamily::cyclic_1d(d, n).map_err(stage("verify"))?;
                let got = laplace_hdc::permutations::gamma(&family) as f64;
                let want = ((2 * d - 1) * n) as f64;
                worst = worst.max((got - want).abs() / want);
            }
        }
        rows.push(ReportRow {
            criterion: "overlap-closed-form".into(),
            predicted: 0.0,
            observed: worst,
            tolerance: 1e-15,
            pass: worst <= 1e-15,
        });
    }

    // Positive-definiteness boundary of exp(−λ r^β) in the exponent β.
    {
        let scan = schoenberg_scan(&[0.5, 1.0, 2.0, 3.0, 4.0], 64, 0.01).map_err(stage("verify"))?;
        for (beta, min_eig) in scan {
            let (pass, tolerance) = if beta <= 2.0 {
                (min_eig >= -1e-8, -1e-8)
            } else {
                (min_eig < -1e-6, -1e-6)
            };
            rows.push(ReportRow {
                criterion: format!("schoenberg-beta{beta}"),
                predicted: 0.0,
                observed: min_eig,
                tolerance,
                pass,
            });
        }
    }

    // Product form: K within 2(λr)² of exp(−λr) while λr stays small.
    {
        let lambda = 0.0015; // λ·r ≤ 0.0945 over the whole m = 64 grid
        let km = build_kernel(&KernelSpec::new(1.0, lambda, 64)).map_err(stage("verify"))?;
        let mut worst = 0.0f64;
        for r in 1..64usize {
            let k = km.affinity(1, 1 + r as u16);
            let lr = lambda * r as f64;
            let ratio = (k - (-lr).exp()).abs() / (2.0 * lr * lr);
            worst = worst.max(ratio);
        }
        rows.push(ReportRow {
            criterion: "laplace-limit".into(),
            predicted: 1.0,
            observed: worst,
            tolerance: 1.0,
            pass: worst <= 1.0,
        });
    }

    // Exact translation equivariance of the block 2-d family.
    {
        let km = build_kernel(&KernelSpec::new(1.0, 0.2, 8)).map_err(stage("verify"))?;
        let family = PermutationFamily::block_2d(4, 2).map_err(stage("verify"))?;
        let hv = generate_hypervectors(&km, family.n(), mix(seed, 0x14)).map_err(stage("verify"))?;
        let cfg = EncoderConfig::new(hv, family).map_err(stage("verify"))?;
        let shifts: Vec<(usize, usize)> =
            (0..4).flat_map(|a| (0..4).map(move |b| (a, b))).collect();
        let mut rng = SplitMix64::new(mix(seed, 0x15));
        let mut worst = 0.0f64;
        let mut all_exact = true;
        for _ in 0..20 {
            let image: Vec<u16> = (0..16).map(|_| rng.next_below(8) as u16 + 1).collect();
            for check in equivariance_check(&cfg, &image, &shifts).map_err(stage("verify"))? {
                let ShiftCheck { exact, mismatch_fraction, .. } = check;
                all_exact &= exact;
                worst = worst.max(mismatch_fraction);
            }
        }
        rows.push(ReportRow {
            criterion: "equivariance-block2d".into(),
            predicted: 0.0,
            observed: worst,
            tolerance: 0.0,
            pass: all_exact,
        });
    }

    let csv = laplace_hdc::verify::report_csv(&rows);
    let path = write_out(out_dir, "verify.csv", &csv)?;
    Ok((rows, path))
}
