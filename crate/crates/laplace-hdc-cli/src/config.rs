//! Run configuration: command-line flags, optional TOML config file, and
//! the merge between them.
//!
//! Every knob is expressible both ways under the same kebab-case name
//! (`--n-cap 4096` ↔ `n-cap = 4096`), with flags taking precedence over the
//! file and the file over built-in defaults. Resolution produces one flat
//! [`RunConfig`] that the pipelines consume; nothing downstream looks at
//! flags or files again.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Toml { path: String, source: toml::de::Error },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMode {
    /// Quantized pixels, d = side².
    Raw,
    /// Gram-basis decorrelated features, d = rank.
    Svd,
    /// 4×4 filter-bank responses, d = 9·positions².
    Haar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Cyclic1d,
    Block1d,
    Cyclic2d,
    Block2d,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierMode {
    MajorityBinary,
    MajorityFloat,
    SgdFloat,
    SgdBinary,
}

impl ClassifierMode {
    pub fn is_sgd(self) -> bool {
        matches!(self, ClassifierMode::SgdFloat | ClassifierMode::SgdBinary)
    }

    pub fn is_binary(self) -> bool {
        matches!(self, ClassifierMode::MajorityBinary | ClassifierMode::SgdBinary)
    }

    /// Label used in the results CSV.
    pub fn label(self) -> &'static str {
        match self {
            ClassifierMode::MajorityBinary => "majority-binary",
            ClassifierMode::MajorityFloat => "majority-float",
            ClassifierMode::SgdFloat => "sgd-float",
            ClassifierMode::SgdBinary => "sgd-binary",
        }
    }
}

impl FamilyKind {
    pub fn label(self) -> &'static str {
        match self {
            FamilyKind::Cyclic1d => "cyclic1d",
            FamilyKind::Block1d => "block1d",
            FamilyKind::Cyclic2d => "cyclic2d",
            FamilyKind::Block2d => "block2d",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimingMode {
    /// Leave the runtime column empty; re-runs are byte-identical.
    None,
    /// Record wall-clock seconds per repetition.
    Wall,
}

/// Flags shared by the run-style subcommands. Every field is optional here;
/// [`resolve`] fills gaps from the config file and then from defaults.
#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// TOML config file; flat kebab-case keys named like the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory holding <dataset>/train-images-idx3-ubyte etc.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Dataset name (subdirectory of data-dir, e.g. mnist or fashion).
    #[arg(long)]
    pub dataset: Option<String>,
    /// Explicit path overriding data-dir/dataset resolution.
    #[arg(long)]
    pub train_images: Option<PathBuf>,
    #[arg(long)]
    pub train_labels: Option<PathBuf>,
    #[arg(long)]
    pub test_images: Option<PathBuf>,
    #[arg(long)]
    pub test_labels: Option<PathBuf>,
    /// Feature pipeline in front of the encoder.
    #[arg(long)]
    pub features: Option<FeatureMode>,
    /// Filter-bank stride; (side − 4) must be a multiple of it.
    #[arg(long)]
    pub haar_stride: Option<usize>,
    /// Number of leading basis directions kept by the svd pipeline.
    #[arg(long)]
    pub svd_rank: Option<usize>,
    /// Permutation family binding features to positions.
    #[arg(long)]
    pub family: Option<FamilyKind>,
    #[arg(long)]
    pub classifier: Option<ClassifierMode>,
    /// Hypervector length budget; the family picks the largest N ≤ cap its
    /// structure allows.
    #[arg(long)]
    pub n_cap: Option<usize>,
    /// Bandwidth scale: λ = c / median ℓ¹ distance. Defaults to 1, or 4 for
    /// the binary SGD classifier.
    #[arg(long)]
    pub bandwidth_c: Option<f64>,
    /// Training pairs sampled for the median distance.
    #[arg(long)]
    pub bandwidth_samples: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Binary SGD: clamp at epoch ends instead of after every step.
    #[arg(long)]
    pub clamp_per_epoch: bool,
    /// Independent repetitions (fresh derived seed each).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed; every random choice in a run derives from it.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Runtime column mode for the results CSV.
    #[arg(long)]
    pub timing: Option<TimingMode>,
    /// Use only the first k training samples.
    #[arg(long)]
    pub subset: Option<usize>,
    /// Use only the first k test samples.
    #[arg(long)]
    pub test_subset: Option<usize>,
    /// Robustness: test-time bit-flip ratios, comma separated, each ≤ 0.5.
    #[arg(long, value_delimiter = ',')]
    pub flip_ratios: Option<Vec<f64>>,
}

/// Config-file mirror of [`CommonArgs`]; unknown keys are rejected so typos
/// fail loudly instead of silently using a default.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub data_dir: Option<PathBuf>,
    pub dataset: Option<String>,
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub features: Option<FeatureMode>,
    pub haar_stride: Option<usize>,
    pub svd_rank: Option<usize>,
    pub family: Option<FamilyKind>,
    pub classifier: Option<ClassifierMode>,
    pub n_cap: Option<usize>,
    pub bandwidth_c: Option<f64>,
    pub bandwidth_samples: Option<usize>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub clamp_per_epoch: Option<bool>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub timing: Option<TimingMode>,
    pub subset: Option<usize>,
    pub test_subset: Option<usize>,
    pub flip_ratios: Option<Vec<f64>>,
}

/// Fully resolved run parameters.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub dataset: String,
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    pub features: FeatureMode,
    pub haar_stride: usize,
    pub svd_rank: Option<usize>,
    pub family: FamilyKind,
    pub classifier: ClassifierMode,
    pub n_cap: usize,
    pub bandwidth_c: f64,
    pub bandwidth_samples: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub clamp_per_epoch: bool,
    pub reps: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub timing: TimingMode,
    pub subset: Option<usize>,
    pub test_subset: Option<usize>,
    pub flip_ratios: Vec<f64>,
}

pub fn load_file_config(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    toml::from_str(&text).map_err(|source| ConfigError::Toml { path: path.display().to_string(), source })
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Merge flags over the config file over defaults, resolve dataset paths,
/// and validate ranges.
pub fn resolve(args: &CommonArgs) -> Result<RunConfig, ConfigError> {
    let file = match &args.config {
        Some(path) => load_file_config(path)?,
        None => FileConfig::default(),
    };
    let a = args.clone();
    let dataset = pick(a.dataset, file.dataset, "mnist".into());
    let data_dir = pick(a.data_dir, file.data_dir, PathBuf::from("data"));
    let base = data_dir.join(&dataset);
    let path_of = |explicit: Option<PathBuf>, from_file: Option<PathBuf>, name: &str| {
        explicit.or(from_file).unwrap_or_else(|| base.join(name))
    };
    let classifier = pick(a.classifier, file.classifier, ClassifierMode::MajorityBinary);
    // A sharper kernel compensates for the binary model's weight quantization.
    let default_c = if classifier == ClassifierMode::SgdBinary { 4.0 } else { 1.0 };
    let cfg = RunConfig {
        train_images: path_of(a.train_images, file.train_images, "train-images-idx3-ubyte"),
        train_labels: path_of(a.train_labels, file.train_labels, "train-labels-idx1-ubyte"),
        test_images: path_of(a.test_images, file.test_images, "t10k-images-idx3-ubyte"),
        test_labels: path_of(a.test_labels, file.test_labels, "t10k-labels-idx1-ubyte"),
        dataset,
        features: pick(a.features, file.features, FeatureMode::Raw),
        haar_stride: pick(a.haar_stride, file.haar_stride, 4),
        svd_rank: a.svd_rank.or(file.svd_rank),
        family: pick(a.family, file.family, FamilyKind::Cyclic1d),
        classifier,
        n_cap: pick(a.n_cap, file.n_cap, 10_000),
        bandwidth_c: pick(a.bandwidth_c, file.bandwidth_c, default_c),
        bandwidth_samples: pick(a.bandwidth_samples, file.bandwidth_samples, 1000),
        epochs: pick(a.epochs, file.epochs, 3),
        batch_size: pick(a.batch_size, file.batch_size, 64),
        learning_rate: pick(a.learning_rate, file.learning_rate, 0.01),
        clamp_per_epoch: a.clamp_per_epoch || file.clamp_per_epoch.unwrap_or(false),
        reps: pick(a.reps, file.reps, 5),
        seed: pick(a.seed, file.seed, 42),
        out_dir: pick(a.out_dir, file.out_dir, PathBuf::from("out")),
        timing: pick(a.timing, file.timing, TimingMode::None),
        subset: a.subset.or(file.subset),
        test_subset: a.test_subset.or(file.test_subset),
        flip_ratios: pick(a.flip_ratios, file.flip_ratios, vec![0.0, 0.1, 0.25, 0.5]),
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    let bad = |what: String| Err(ConfigError::Invalid(what));
    if cfg.n_cap == 0 {
        return bad("n-cap must be positive".into());
    }
    if cfg.reps == 0 {
        return bad("reps must be positive".into());
    }
    if cfg.epochs == 0 {
        return bad("epochs must be positive".into());
    }
    if cfg.batch_size == 0 {
        return bad("batch-size must be positive".into());
    }
    if !(cfg.learning_rate > 0.0) {
        return bad(format!("learning-rate must be positive, got {}", cfg.learning_rate));
    }
    if !(cfg.bandwidth_c > 0.0) {
        return bad(format!("bandwidth-c must be positive, got {}", cfg.bandwidth_c));
    }
    if cfg.bandwidth_samples == 0 {
        return bad("bandwidth-samples must be positive".into());
    }
    if cfg.haar_stride == 0 {
        return bad("haar-stride must be positive".into());
    }
    if cfg.svd_rank == Some(0) {
        return bad("svd-rank must be positive".into());
    }
    if cfg.subset == Some(0) || cfg.test_subset == Some(0) {
        return bad("subset sizes must be positive".into());
    }
    for &r in &cfg.flip_ratios {
        if !(0.0..=0.5).contains(&r) {
            return bad(format!("flip ratio {r} outside [0, 0.5]"));
        }
    }
    Ok(())
}
