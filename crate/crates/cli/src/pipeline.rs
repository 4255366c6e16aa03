//! Train, estimate and summarize: the stages behind `train`, `infoplane`
//! and `repro`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use infoplane::mi_est::{info_plane, BinningConfig, InfoPlanePoint};
use infoplane::nn::{log_schedule, read_trace_dir, train, write_trace_dir, Mlp, Samples, TraceMeta};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

/// Outcome of one seed's training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub trace_dir: PathBuf,
    pub final_epoch: usize,
    pub final_loss: f64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed-{seed}"))
}

/// Trains every configured seed, writing one trace directory per seed plus
/// `config.toml`, the resolved config, into `out`.
pub fn train_all(cfg: &ExperimentConfig, out: &Path, progress: bool) -> CliResult<Vec<SeedRun>> {
    let data = cfg.dataset.load()?;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.toml"), cfg.to_toml())?;
    let train_set = Samples::new(data.train.features(), data.train.labels())?;
    let test_set = data
        .test
        .as_ref()
        .map(|t| Samples::new(t.features(), t.labels()))
        .transpose()?;
    let schedule = log_schedule(cfg.model.epochs, cfg.log_points);
    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let mlp_cfg = cfg.mlp_config(data.train.dim(), data.train.num_classes(), seed);
        mlp_cfg
            .validate(Some(data.train.len()))
            .map_err(|e| CliError::validation(format!("model: {e}")))?;
        if progress {
            eprintln!(
                "seed {seed}: training {:?} {} for {} epochs on {} samples",
                mlp_cfg.hidden_widths,
                mlp_cfg.activation,
                mlp_cfg.epochs,
                data.train.len()
            );
        }
        let mut model = Mlp::<f64>::init(&mlp_cfg)?;
        let trace = train(&mut model, &mlp_cfg, train_set, test_set, data.eval.features(), &schedule)?;
        let dir = seed_dir(out, seed);
        let meta = TraceMeta {
            config: mlp_cfg,
            logged_epochs: trace.logged_epochs(),
            dataset_name: data.eval.name().to_string(),
            dataset_checksum: data.eval.checksum().to_string(),
            eval_labels: data.eval.labels().to_vec(),
            deterministic: true,
        };
        write_trace_dir(&dir, &trace, &meta)?;
        let last = trace.final_record().expect("schedule logs the final epoch");
        if progress {
            eprintln!("seed {seed}: loss {:.6} train acc {:.4}", last.loss, last.train_acc);
        }
        runs.push(SeedRun {
            seed,
            trace_dir: dir,
            final_epoch: last.epoch,
            final_loss: last.loss,
            train_acc: last.train_acc,
            test_acc: last.test_acc,
        });
    }
    Ok(runs)
}

/// Information-plane points of one seed, ordered by `(epoch, layer)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedCurve {
    pub seed: u64,
    pub hidden_widths: Vec<usize>,
    pub points: Vec<InfoPlanePoint>,
}

/// Reads trace directories and bins their snapshots. `binning = None` uses
/// the default for each trace's activation.
pub fn curves_from_traces(dirs: &[PathBuf], binning: Option<BinningConfig>) -> CliResult<Vec<SeedCurve>> {
    if dirs.is_empty() {
        return Err(CliError::validation("no trace directories given"));
    }
    let mut curves = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let (meta, snaps) = read_trace_dir(dir)
            .map_err(|e| CliError::from(e))
            .map_err(|e| CliError::validation(format!("trace {}: {e}", dir.display())))?;
        let cfg = binning.unwrap_or_else(|| BinningConfig::for_activation(meta.config.activation));
        let points = info_plane(&snaps, &meta.eval_labels, &cfg)?;
        curves.push(SeedCurve {
            seed: meta.config.seed,
            hidden_widths: meta.config.hidden_widths.clone(),
            points,
        });
    }
    curves.sort_by_key(|c| c.seed);
    if curves.windows(2).any(|w| w[0].seed == w[1].seed) {
        return Err(CliError::validation("two traces share a seed"));
    }
    Ok(curves)
}

/// Pointwise mean over seeds. All curves must share epochs and layers.
pub fn mean_curve(curves: &[SeedCurve]) -> CliResult<Vec<InfoPlanePoint>> {
    let first = curves.first().ok_or_else(|| CliError::validation("no curves to average"))?;
    let key = |p: &InfoPlanePoint| (p.epoch, p.layer);
    for c in curves {
        if c.points.len() != first.points.len() || c.points.iter().zip(&first.points).any(|(a, b)| key(a) != key(b)) {
            return Err(CliError::validation(format!(
                "seed {} was logged at different epochs or layers than seed {}",
                c.seed, first.seed
            )));
        }
    }
    let n = curves.len() as f64;
    Ok(first
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| InfoPlanePoint {
            epoch: p.epoch,
            layer: p.layer,
            mi_xt_bits: curves.iter().map(|c| c.points[i].mi_xt_bits).sum::<f64>() / n,
            mi_ty_bits: curves.iter().map(|c| c.points[i].mi_ty_bits).sum::<f64>() / n,
        })
        .collect())
}

pub const MERGED_CSV_HEADER: &str = "seed,epoch,layer,mi_xt_bits,mi_ty_bits";
/// Seed column value of the averaged block.
pub const MEAN_SEED: &str = "mean";

/// Per-seed rows followed by the seed-averaged block.
pub fn merged_csv(curves: &[SeedCurve]) -> CliResult<String> {
    let mean = mean_curve(curves)?;
    let mut out = String::from(MERGED_CSV_HEADER);
    out.push('\n');
    let mut row = |seed: &str, p: &InfoPlanePoint| {
        out.push_str(&format!("{seed},{},{},{},{}\n", p.epoch, p.layer, p.mi_xt_bits, p.mi_ty_bits));
    };
    for c in curves {
        for p in &c.points {
            row(&c.seed.to_string(), p);
        }
    }
    for p in &mean {
        row(MEAN_SEED, p);
    }
    Ok(out)
}

/// Rows of a merged CSV grouped by seed label (`"mean"` included). A CSV
/// without a seed column is read as a single group named `"all"`.
pub fn parse_infoplane_csv(text: &str) -> CliResult<BTreeMap<String, Vec<InfoPlanePoint>>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| CliError::validation("infoplane CSV is empty"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let with_seed = match cols.as_slice() {
        ["seed", "epoch", "layer", "mi_xt_bits", "mi_ty_bits"] => true,
        ["epoch", "layer", "mi_xt_bits", "mi_ty_bits"] => false,
        _ => return Err(CliError::validation(format!("infoplane CSV: unexpected header {header:?}"))),
    };
    let mut groups: BTreeMap<String, Vec<InfoPlanePoint>> = BTreeMap::new();
    for (i, line) in lines {
        let row = i + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != cols.len() {
            return Err(CliError::validation(format!("infoplane CSV row {row}: expected {} cells", cols.len())));
        }
        let (seed, rest) = if with_seed {
            (cells[0].to_string(), &cells[1..])
        } else {
            ("all".to_string(), &cells[..])
        };
        let bad = |what: &str| CliError::validation(format!("infoplane CSV row {row}: bad {what}"));
        let point = InfoPlanePoint {
            epoch: rest[0].parse().map_err(|_| bad("epoch"))?,
            layer: rest[1].parse().map_err(|_| bad("layer"))?,
            mi_xt_bits: rest[2].parse().map_err(|_| bad("mi_xt_bits"))?,
            mi_ty_bits: rest[3].parse().map_err(|_| bad("mi_ty_bits"))?,
        };
        if point.mi_xt_bits < -1e-9 || point.mi_ty_bits < -1e-9 {
            return Err(CliError::validation(format!("infoplane CSV row {row}: negative mutual information")));
        }
        groups.entry(seed).or_default().push(point);
    }
    if groups.is_empty() {
        return Err(CliError::validation("infoplane CSV has no rows"));
    }
    Ok(groups)
}

/// A layer "shows compression" when its depth reaches this many bits.
pub const COMPRESSION_THRESHOLD_BITS: f64 = 0.5;

/// Fitting/compression diagnostics of one layer's curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerPhase {
    pub layer: usize,
    pub width: Option<usize>,
    pub mi_xt_initial: f64,
    pub mi_xt_peak: f64,
    pub mi_xt_final: f64,
    /// Largest drop of `I(X;T)` from its running peak to the final epoch.
    pub compression_depth: f64,
    pub shows_compression: bool,
    pub mi_ty_initial: f64,
    pub mi_ty_final: f64,
    pub mi_ty_gain: f64,
    /// Largest drop of `I(T;Y)` below its running maximum at any epoch.
    pub mi_ty_max_drop: f64,
}

pub fn layer_phases(points: &[InfoPlanePoint], widths: Option<&[usize]>) -> Vec<LayerPhase> {
    let mut by_layer: BTreeMap<usize, Vec<&InfoPlanePoint>> = BTreeMap::new();
    for p in points {
        by_layer.entry(p.layer).or_default().push(p);
    }
    by_layer
        .into_iter()
        .map(|(layer, mut pts)| {
            pts.sort_by_key(|p| p.epoch);
            let first = pts[0];
            let last = pts[pts.len() - 1];
            let mut xt_peak = f64::NEG_INFINITY;
            let mut depth = 0.0f64;
            let mut ty_peak = f64::NEG_INFINITY;
            let mut ty_drop = 0.0f64;
            for p in &pts {
                xt_peak = xt_peak.max(p.mi_xt_bits);
                depth = depth.max(xt_peak - last.mi_xt_bits);
                ty_peak = ty_peak.max(p.mi_ty_bits);
                ty_drop = ty_drop.max(ty_peak - p.mi_ty_bits);
            }
            LayerPhase {
                layer,
                width: widths.and_then(|w| w.get(layer).copied()),
                mi_xt_initial: first.mi_xt_bits,
                mi_xt_peak: xt_peak,
                mi_xt_final: last.mi_xt_bits,
                compression_depth: depth,
                shows_compression: depth >= COMPRESSION_THRESHOLD_BITS,
                mi_ty_initial: first.mi_ty_bits,
                mi_ty_final: last.mi_ty_bits,
                mi_ty_gain: last.mi_ty_bits - first.mi_ty_bits,
                mi_ty_max_drop: ty_drop,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedPhases {
    pub seed: u64,
    pub layers: Vec<LayerPhase>,
}

/// Diagnostics of the seed-averaged curve plus every seed on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub seeds: Vec<u64>,
    pub compression_threshold_bits: f64,
    pub mean: Vec<LayerPhase>,
    pub per_seed: Vec<SeedPhases>,
}

pub fn phase_summary(curves: &[SeedCurve]) -> CliResult<PhaseSummary> {
    let mean = mean_curve(curves)?;
    let widths = curves[0].hidden_widths.as_slice();
    Ok(PhaseSummary {
        seeds: curves.iter().map(|c| c.seed).collect(),
        compression_threshold_bits: COMPRESSION_THRESHOLD_BITS,
        mean: layer_phases(&mean, Some(widths)),
        per_seed: curves
            .iter()
            .map(|c| SeedPhases {
                seed: c.seed,
                layers: layer_phases(&c.points, Some(&c.hidden_widths)),
            })
            .collect(),
    })
}
