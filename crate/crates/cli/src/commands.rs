use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use infoplane::data::{self, Dataset};
use infoplane::ib::DEFAULT_BETAS;
use infoplane::mi_est::{BinningConfig, RangeMode, DEFAULT_BINS};
use infoplane::nn::read_trace_dir;
use infoplane::rates::{rate_summary, FeatureMatrix, Partition, Precision};
use infoplane::scalar::nats_to_bits;
use serde::Serialize;

use crate::config::{ExperimentConfig, Overrides};
use crate::error::{CliError, CliResult};
use crate::panels::Panel;
use crate::pipeline::{self, PhaseSummary, SeedRun, MEAN_SEED};
use crate::plot::render_svg;
use crate::verify::{self, DEFAULT_SHAPE};

#[derive(Debug, Parser)]
#[command(name = "infoplane", version, about = "Coding-rate and information-plane experiments")]
pub struct Cli {
    /// Root for outputs when neither the config nor --out names a directory.
    #[arg(long, global = true, env = "INFOPLANE_OUT", default_value = "infoplane-out")]
    pub out_root: PathBuf,
    /// Suppress progress lines on standard error.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check |-dI/beta - dR| = R/beta on random instances and traces.
    Verify(VerifyArgs),
    /// Print R, R^c and dR of a feature matrix.
    Rate(RateArgs),
    /// Train one network per seed and write trace directories.
    Train(TrainArgs),
    /// Bin trace snapshots into a merged information-plane CSV.
    Infoplane(InfoplaneArgs),
    /// Draw an information-plane CSV as SVG.
    Plot(PlotArgs),
    /// Run train, infoplane and plot for one figure panel.
    Repro(ReproArgs),
    /// Write a dataset as CSV.
    GenData(GenDataArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub instances: usize,
    /// Use a single class in every random instance.
    #[arg(long)]
    pub single_class: bool,
    /// Add this amount to every dR; a nonzero value must make the check fail.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub corrupt: f64,
    /// Also check the final-epoch snapshots of these trace directories.
    #[arg(long = "trace")]
    pub traces: Vec<PathBuf>,
    /// Precision used for trace snapshots.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    /// Report path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// Feature matrix as CSV (header f0..) or binary (.bin).
    #[arg(long, conflicts_with_all = ["dataset", "trace"])]
    pub features: Option<PathBuf>,
    /// Class index per sample, whitespace or comma separated.
    #[arg(long, requires = "features")]
    pub labels: Option<PathBuf>,
    /// Labeled dataset CSV (trailing label column).
    #[arg(long, requires = "classes", conflicts_with = "trace")]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub classes: Option<usize>,
    /// Trace directory; combine with --epoch and --layer.
    #[arg(long, requires_all = ["epoch", "layer"])]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub epoch: Option<usize>,
    #[arg(long)]
    pub layer: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RangeArg {
    Fixed,
    PerLayer,
    Global,
}

#[derive(Debug, Args)]
pub struct InfoplaneArgs {
    /// Trace directories, or train outputs holding seed-* directories.
    #[arg(long = "trace", required = true)]
    pub traces: Vec<PathBuf>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, value_enum)]
    pub range: Option<RangeArg>,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub hi: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the phase diagnostics as JSON here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Seed block to draw; defaults to the averaged block when present.
    #[arg(long)]
    pub seed: Option<String>,
    /// Hidden widths for the legend, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub widths: Option<Vec<usize>>,
    #[arg(long, default_value = "Information plane")]
    pub title: String,
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    #[arg(long)]
    pub panel: Panel,
    /// Directory holding images-idx3-ubyte and labels-idx1-ubyte (panel d).
    #[arg(long, env = "INFOPLANE_MNIST_DIR", default_value = "data/mnist")]
    pub mnist_dir: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataKind {
    Szt,
    Mnist,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, value_enum, default_value_t = DataKind::Szt)]
    pub kind: DataKind,
    #[arg(long, default_value_t = 0)]
    pub noise_seed: u64,
    /// Label threshold; balanced by bisection when absent.
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    #[arg(long, required_if_eq("kind", "mnist"))]
    pub images: Option<PathBuf>,
    #[arg(long, required_if_eq("kind", "mnist"))]
    pub labels: Option<PathBuf>,
    /// Stratified subset size (MNIST).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs one parsed command line, writing results to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let progress = !cli.quiet;
    match cli.command {
        Command::Verify(a) => cmd_verify(a, stdout),
        Command::Rate(a) => cmd_rate(a, stdout),
        Command::Train(a) => {
            let mut cfg = ExperimentConfig::load(&a.config)?;
            cfg.apply(&a.overrides)?;
            let out = cfg.output_dir.clone().unwrap_or_else(|| cli.out_root.join("train"));
            let runs = pipeline::train_all(&cfg, &out, progress)?;
            write_json(stdout, &runs)
        }
        Command::Infoplane(a) => cmd_infoplane(a, &cli.out_root, stdout),
        Command::Plot(a) => cmd_plot(a),
        Command::Repro(a) => {
            let mut cfg = a.panel.config(&a.mnist_dir);
            cfg.apply(&a.overrides)?;
            let out = cfg
                .output_dir
                .clone()
                .unwrap_or_else(|| cli.out_root.join(format!("panel-{}", a.panel)));
            let report = repro(&cfg, &out, &format!("Panel ({})", a.panel), progress)?;
            write_json(stdout, &report)
        }
        Command::GenData(a) => cmd_gen_data(a),
    }
}

fn write_json<T: Serialize>(w: &mut dyn Write, v: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(v).map_err(CliError::runtime)?;
    writeln!(w, "{text}")?;
    Ok(())
}

fn cmd_verify(a: VerifyArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let betas = a.betas.unwrap_or_else(|| DEFAULT_BETAS.to_vec());
    let mut instances: Vec<(String, verify::Instance)> =
        verify::random_suite(a.seed, a.instances, DEFAULT_SHAPE, a.single_class)
            .into_iter()
            .enumerate()
            .map(|(i, inst)| (format!("random:{i}"), inst))
            .collect();
    instances.extend(verify::trace_instances(&a.traces, a.eps)?);
    if instances.is_empty() {
        return Err(CliError::validation("instances: nothing to verify"));
    }
    let report = verify::run(&instances, &betas, a.corrupt)?;
    let eps: Vec<f64> = instances.iter().map(|(_, i)| i.eps.get()).collect();
    let csv = report.to_csv(&eps);
    match &a.out {
        Some(path) => fs::write(path, &csv)?,
        None => stdout.write_all(csv.as_bytes())?,
    }
    match report.first_failure() {
        None => Ok(()),
        Some((src, row)) => Err(CliError::CheckFailed(format!(
            "{src},beta={},residual={},predicted={}",
            row.beta, row.residual, row.predicted
        ))),
    }
}

fn read_labels(path: &Path) -> CliResult<Vec<usize>> {
    let text = fs::read_to_string(path)?;
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(i, t)| {
            t.parse()
                .map_err(|_| CliError::validation(format!("labels: entry {} ({t:?}) is not a class index", i + 1)))
        })
        .collect()
}

fn read_features(path: &Path) -> CliResult<FeatureMatrix<f64>> {
    let f = fs::File::open(path).map_err(|e| CliError::validation(format!("features {}: {e}", path.display())))?;
    let fm = if path.extension().is_some_and(|e| e == "bin") {
        FeatureMatrix::read_binary(BufReader::new(f))?
    } else {
        FeatureMatrix::read_csv(BufReader::new(f))?
    };
    Ok(fm)
}

fn cmd_rate(a: RateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let (z, labels) = if let Some(path) = &a.features {
        let z = read_features(path)?;
        let labels = match &a.labels {
            Some(p) => read_labels(p)?,
            None => vec![0; z.samples()],
        };
        (z, labels)
    } else if let Some(path) = &a.dataset {
        let ds: Dataset<f64> = data::import_csv(path, a.classes.unwrap_or(2))?;
        (ds.feature_matrix()?, ds.labels().to_vec())
    } else if let Some(dir) = &a.trace {
        let (meta, snaps) = read_trace_dir(dir)?;
        let (epoch, layer) = (a.epoch.unwrap_or(0), a.layer.unwrap_or(0));
        let snap = snaps
            .into_iter()
            .find(|s| s.epoch == epoch && s.layer == layer)
            .ok_or_else(|| CliError::validation(format!("trace has no snapshot for epoch {epoch} layer {layer}")))?;
        (FeatureMatrix::new(snap.values)?, meta.eval_labels)
    } else {
        return Err(CliError::validation("rate: give --features, --dataset or --trace"));
    };
    let partition = Partition::from_labels(&labels)?;
    let s = rate_summary(&z, &partition, Precision::new(a.eps)?)?;
    writeln!(stdout, "quantity,nats,bits")?;
    for (name, v) in [
        ("rate", s.rate),
        ("conditional_rate", s.conditional_rate),
        ("reduction", s.reduction),
    ] {
        writeln!(stdout, "{name},{v},{}", nats_to_bits(v))?;
    }
    Ok(())
}

/// Trace directories named directly, or the seed-* children of a train
/// output directory.
fn expand_traces(dirs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for d in dirs {
        if d.join("meta.json").exists() {
            out.push(d.clone());
            continue;
        }
        let mut children: Vec<PathBuf> = fs::read_dir(d)
            .map_err(|e| CliError::validation(format!("trace {}: {e}", d.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("meta.json").exists())
            .collect();
        if children.is_empty() {
            return Err(CliError::validation(format!("trace {}: no meta.json found", d.display())));
        }
        children.sort();
        out.extend(children);
    }
    Ok(out)
}

fn cmd_infoplane(a: InfoplaneArgs, out_root: &Path, stdout: &mut dyn Write) -> CliResult<()> {
    let dirs = expand_traces(&a.traces)?;
    let binning = match (a.bins, a.range) {
        (None, None) => None,
        (bins, range) => {
            let range_mode = match range.unwrap_or(RangeArg::PerLayer) {
                RangeArg::Fixed => RangeMode::Fixed { lo: a.lo, hi: a.hi },
                RangeArg::PerLayer => RangeMode::PerLayerObserved,
                RangeArg::Global => RangeMode::GlobalObserved,
            };
            Some(BinningConfig::new(bins.unwrap_or(DEFAULT_BINS), range_mode)?)
        }
    };
    let curves = pipeline::curves_from_traces(&dirs, binning)?;
    let out = a.out.unwrap_or_else(|| out_root.join("infoplane.csv"));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&out, pipeline::merged_csv(&curves)?)?;
    let summary = pipeline::phase_summary(&curves)?;
    if let Some(path) = &a.summary {
        fs::write(path, serde_json::to_string_pretty(&summary).map_err(CliError::runtime)? + "\n")?;
    }
    write_json(stdout, &summary)
}

fn cmd_plot(a: PlotArgs) -> CliResult<()> {
    let text = fs::read_to_string(&a.input)
        .map_err(|e| CliError::validation(format!("input {}: {e}", a.input.display())))?;
    let groups = pipeline::parse_infoplane_csv(&text)?;
    let key = match &a.seed {
        Some(s) => s.clone(),
        None if groups.contains_key(MEAN_SEED) => MEAN_SEED.to_string(),
        None => groups.keys().next().cloned().expect("parse rejects empty CSVs"),
    };
    let points = groups
        .get(&key)
        .ok_or_else(|| CliError::validation(format!("seed: no rows for {key:?}")))?;
    let svg = render_svg(points, a.widths.as_deref(), &a.title)?;
    fs::write(&a.out, svg)?;
    Ok(())
}

fn cmd_gen_data(a: GenDataArgs) -> CliResult<()> {
    let ds: Dataset<f64> = match a.kind {
        DataKind::Szt => data::gen_szt(a.threshold, a.noise_seed),
        DataKind::Mnist => {
            let images = a.images.as_ref().expect("clap requires --images");
            let labels = a.labels.as_ref().expect("clap requires --labels");
            let full = data::load_mnist_idx(images, labels)?;
            data::subsample(&full, a.n.unwrap_or(full.len()), a.seed)?
        }
    };
    let f = fs::File::create(&a.out)?;
    data::export_csv(&ds, std::io::BufWriter::new(f))?;
    Ok(())
}

/// Files written by [`repro`], relative to the panel directory, and the
/// diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct ReproReport {
    pub out_dir: PathBuf,
    pub runs: Vec<SeedRun>,
    pub infoplane_csv: PathBuf,
    pub figure: PathBuf,
    pub seed_figures: Vec<PathBuf>,
    pub summary_json: PathBuf,
    pub summary: PhaseSummary,
}

/// Train every seed, bin the traces, draw the averaged and per-seed
/// figures and write the phase diagnostics.
pub fn repro(cfg: &ExperimentConfig, out: &Path, title: &str, progress: bool) -> CliResult<ReproReport> {
    let runs = pipeline::train_all(cfg, out, progress)?;
    let dirs: Vec<PathBuf> = runs.iter().map(|r| r.trace_dir.clone()).collect();
    let curves = pipeline::curves_from_traces(&dirs, Some(cfg.binning()))?;
    let csv_path = out.join("infoplane.csv");
    fs::write(&csv_path, pipeline::merged_csv(&curves)?)?;
    let widths = cfg.model.hidden_widths.as_slice();
    let mean = pipeline::mean_curve(&curves)?;
    let figure = out.join("infoplane.svg");
    fs::write(&figure, render_svg(&mean, Some(widths), &format!("{title}, mean of {} seeds", curves.len()))?)?;
    let mut seed_figures = Vec::new();
    for c in &curves {
        let p = out.join(format!("infoplane-seed-{}.svg", c.seed));
        fs::write(&p, render_svg(&c.points, Some(widths), &format!("{title}, seed {}", c.seed))?)?;
        seed_figures.push(p);
    }
    let summary = pipeline::phase_summary(&curves)?;
    let summary_json = out.join("summary.json");
    fs::write(&summary_json, serde_json::to_string_pretty(&summary).map_err(CliError::runtime)? + "\n")?;
    Ok(ReproReport {
        out_dir: out.to_path_buf(),
        runs,
        infoplane_csv: csv_path,
        figure,
        seed_figures,
        summary_json,
        summary,
    })
}
