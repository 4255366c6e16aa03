//! Presets for the four information-plane panels.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use infoplane::nn::{Activation, Optimizer};

use crate::config::{DatasetSpec, ExperimentConfig, ModelSpec, DEFAULT_LOG_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Panel {
    A,
    B,
    C,
    D,
}

pub const PANEL_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

impl Panel {
    /// Hidden widths. For the synthetic panels the 12 inputs and 2 outputs
    /// are fixed by the task.
    pub fn hidden_widths(self) -> Vec<usize> {
        match self {
            Panel::A => vec![10, 7, 5, 3],
            Panel::B => vec![10, 7, 5, 4, 3],
            Panel::C => vec![10, 7, 5, 4, 3],
            Panel::D => vec![32, 28, 24, 20, 16, 12],
        }
    }

    pub fn activation(self) -> Activation {
        match self {
            Panel::B => Activation::Tanh,
            Panel::A | Panel::C | Panel::D => Activation::Relu,
        }
    }

    pub fn uses_mnist(self) -> bool {
        self == Panel::D
    }

    /// The panel's experiment; `mnist_dir` holds `images-idx3-ubyte` and
    /// `labels-idx1-ubyte` for panel d.
    pub fn config(self, mnist_dir: &Path) -> ExperimentConfig {
        let (dataset, learning_rate, batch_size, epochs) = if self.uses_mnist() {
            (
                DatasetSpec::Mnist {
                    images: mnist_dir.join("images-idx3-ubyte"),
                    labels: mnist_dir.join("labels-idx1-ubyte"),
                    subset: 10_000,
                    train_fraction: 0.8,
                    sample_seed: 0,
                },
                0.05,
                128,
                2000,
            )
        } else {
            (
                DatasetSpec::Szt {
                    noise_seed: 0,
                    threshold: None,
                },
                0.1,
                256,
                8000,
            )
        };
        ExperimentConfig {
            dataset,
            model: ModelSpec {
                hidden_widths: self.hidden_widths(),
                activation: self.activation(),
                learning_rate,
                batch_size,
                epochs,
                optimizer: Optimizer::Sgd,
            },
            binning: None,
            seeds: PANEL_SEEDS.to_vec(),
            eps: 0.5,
            betas: infoplane::ib::DEFAULT_BETAS.to_vec(),
            log_points: DEFAULT_LOG_POINTS,
            output_dir: None,
        }
    }
}

impl fmt::Display for Panel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Panel::A => "a",
            Panel::B => "b",
            Panel::C => "c",
            Panel::D => "d",
        })
    }
}

impl FromStr for Panel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Panel::A),
            "b" => Ok(Panel::B),
            "c" => Ok(Panel::C),
            "d" => Ok(Panel::D),
            other => Err(format!("unknown panel {other:?}, expected a, b, c or d")),
        }
    }
}
