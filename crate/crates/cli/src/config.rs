//! Experiment configuration: one TOML file, every value overridable from
//! the command line.
//!
//! ```toml
//! seeds = [0, 1, 2, 3, 4]
//! eps = 0.5
//!
//! [dataset]
//! kind = "szt"          # or "mnist" (images, labels) or "csv" (path, num_classes)
//! noise_seed = 0
//!
//! [model]
//! hidden_widths = [10, 7, 5, 4, 3]
//! activation = "tanh"
//! learning_rate = 0.1
//! batch_size = 256
//! epochs = 8000
//!
//! [binning]             # optional; defaults follow the activation
//! bins = 30
//! range_mode = { mode = "fixed", lo = -1.0, hi = 1.0 }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use infoplane::data::{self, Dataset};
use infoplane::mi_est::BinningConfig;
use infoplane::nn::{Activation, MlpConfig, Optimizer};
use infoplane::ib::DEFAULT_BETAS;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Default number of logged epochs along the geometric schedule.
pub const DEFAULT_LOG_POINTS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    Szt {
        #[serde(default)]
        noise_seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<f64>,
    },
    Mnist {
        images: PathBuf,
        labels: PathBuf,
        /// Seeded stratified subset used for training and snapshots.
        #[serde(default = "default_mnist_subset")]
        subset: usize,
        /// Share of the subset used for training; the rest is the test split.
        #[serde(default = "default_train_fraction")]
        train_fraction: f64,
        #[serde(default)]
        sample_seed: u64,
    },
    Csv {
        path: PathBuf,
        num_classes: usize,
    },
}

fn default_mnist_subset() -> usize {
    10_000
}

fn default_train_fraction() -> f64 {
    0.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub hidden_widths: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    #[serde(default = "default_optimizer")]
    pub optimizer: Optimizer,
}

fn default_optimizer() -> Optimizer {
    Optimizer::Sgd
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binning: Option<BinningConfig>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    #[serde(default = "default_log_points")]
    pub log_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_eps() -> f64 {
    0.5
}

fn default_betas() -> Vec<f64> {
    DEFAULT_BETAS.to_vec()
}

fn default_log_points() -> usize {
    DEFAULT_LOG_POINTS
}

/// Command-line overrides; any flag given wins over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long = "lr")]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Comma-separated hidden layer widths.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub activation: Option<Activation>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub log_points: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::validation(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) -> CliResult<()> {
        if let Some(v) = &o.seeds {
            self.seeds = v.clone();
        }
        if let Some(v) = o.epochs {
            self.model.epochs = v;
        }
        if let Some(v) = o.learning_rate {
            self.model.learning_rate = v;
        }
        if let Some(v) = o.batch_size {
            self.model.batch_size = v;
        }
        if let Some(v) = &o.hidden {
            self.model.hidden_widths = v.clone();
        }
        if let Some(v) = o.activation {
            self.model.activation = v;
            if o.bins.is_none() {
                self.binning = None;
            }
        }
        if let Some(v) = o.bins {
            let mut b = self.binning();
            b.bins = v;
            self.binning = Some(b);
        }
        if let Some(v) = o.eps {
            self.eps = v;
        }
        if let Some(v) = o.log_points {
            self.log_points = v;
        }
        if let Some(v) = &o.out {
            self.output_dir = Some(v.clone());
        }
        self.validate()
    }

    /// Binning in effect: the configured one or the activation's default.
    pub fn binning(&self) -> BinningConfig {
        self.binning
            .unwrap_or_else(|| BinningConfig::for_activation(self.model.activation))
    }

    /// Checks every field that can be checked without touching files.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |field: &str, why: &str| Err(CliError::validation(format!("{field}: {why}")));
        if self.seeds.is_empty() {
            return bad("seeds", "needs at least one seed");
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return bad("seeds", "contains duplicates");
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return bad("eps", "must be finite and > 0");
        }
        if self.betas.is_empty() || self.betas.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return bad("betas", "must be a non-empty list of finite values > 0");
        }
        if self.log_points < 2 {
            return bad("log_points", "must be at least 2");
        }
        match &self.dataset {
            DatasetSpec::Mnist {
                subset, train_fraction, ..
            } => {
                if *subset == 0 {
                    return bad("dataset.subset", "must be positive");
                }
                if !(*train_fraction > 0.0 && *train_fraction <= 1.0) {
                    return bad("dataset.train_fraction", "must lie in (0, 1]");
                }
            }
            DatasetSpec::Csv { num_classes, .. } if *num_classes < 2 => {
                return bad("dataset.num_classes", "must be at least 2");
            }
            _ => {}
        }
        if let Some(b) = &self.binning {
            b.validate().map_err(|e| CliError::validation(format!("binning: {e}")))?;
        }
        // Shape checks that do not need the data.
        self.mlp_config(1, 2, self.seeds[0])
            .validate(None)
            .map_err(|e| CliError::validation(format!("model.{}", strip_kind(&e.to_string()))))?;
        Ok(())
    }

    pub fn mlp_config(&self, input_dim: usize, num_classes: usize, seed: u64) -> MlpConfig {
        MlpConfig {
            input_dim,
            hidden_widths: self.model.hidden_widths.clone(),
            activation: self.model.activation,
            num_classes,
            seed,
            learning_rate: self.model.learning_rate,
            batch_size: self.model.batch_size,
            epochs: self.model.epochs,
            optimizer: self.model.optimizer,
        }
    }
}

fn strip_kind(msg: &str) -> &str {
    msg.split_once(": ").map(|(_, rest)| rest).unwrap_or(msg)
}

/// Training set, optional test set and the fixed snapshot set.
pub struct LoadedData {
    pub train: Dataset<f64>,
    pub test: Option<Dataset<f64>>,
    pub eval: Dataset<f64>,
}

impl DatasetSpec {
    pub fn load(&self) -> CliResult<LoadedData> {
        match self {
            DatasetSpec::Szt { noise_seed, threshold } => {
                let ds = data::gen_szt::<f64>(*threshold, *noise_seed);
                Ok(LoadedData {
                    train: ds.clone(),
                    test: None,
                    eval: ds,
                })
            }
            DatasetSpec::Mnist {
                images,
                labels,
                subset,
                train_fraction,
                sample_seed,
            } => {
                let full = data::load_mnist_idx::<f64>(images, labels)?;
                let eval = data::subsample(&full, *subset, *sample_seed)?;
                let (train, test) = data::split(&eval, *train_fraction, *sample_seed)?;
                let test = (!test.is_empty()).then_some(test);
                Ok(LoadedData { train, test, eval })
            }
            DatasetSpec::Csv { path, num_classes } => {
                let ds = data::import_csv::<f64>(path, *num_classes)?;
                Ok(LoadedData {
                    train: ds.clone(),
                    test: None,
                    eval: ds,
                })
            }
        }
    }
}
