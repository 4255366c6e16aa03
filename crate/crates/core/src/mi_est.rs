//! Plug-in mutual-information estimates from binned activations.
//!
//! Each hidden unit is quantized into equal-width bins; the tuple of a
//! sample's bin indices is its discrete code `T`. For a deterministic
//! network evaluated once per distinct input, `H(T|X) = 0`, so
//! `I(X;T) = H(T)`. `I(T;Y)` comes from the empirical joint of codes and
//! labels. All values are in bits.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::Activation;
use crate::scalar::Real;

/// Activations of one hidden layer at one epoch, `units x samples`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSnapshot<T> {
    pub epoch: usize,
    pub layer: usize,
    pub values: Matrix<T>,
    pub activation: Activation,
}

impl<T: Real> ActivationSnapshot<T> {
    pub fn new(epoch: usize, layer: usize, values: Matrix<T>, activation: Activation) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::input("snapshot needs at least one unit and one sample"));
        }
        if !values.is_finite() {
            return Err(Error::input(format!(
                "snapshot epoch {epoch} layer {layer} has non-finite activations"
            )));
        }
        Ok(Self {
            epoch,
            layer,
            values,
            activation,
        })
    }

    pub fn samples(&self) -> usize {
        self.values.cols()
    }

    fn observed_range(&self) -> (f64, f64) {
        observed_range(std::iter::once(self))
    }
}

fn observed_range<'a, T: Real>(snaps: impl Iterator<Item = &'a ActivationSnapshot<T>>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in snaps {
        for &v in s.values.as_slice() {
            let v = v.as_f64();
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum RangeMode {
    Fixed { lo: f64, hi: f64 },
    /// Min/max of the layer across every snapshot in the run.
    PerLayerObserved,
    /// Min/max across every layer and snapshot in the run.
    GlobalObserved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinningConfig {
    pub bins: usize,
    pub range_mode: RangeMode,
}

pub const DEFAULT_BINS: usize = 30;

impl BinningConfig {
    pub fn new(bins: usize, range_mode: RangeMode) -> Result<Self> {
        let cfg = Self { bins, range_mode };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 30 bins; `[-1, 1]` for tanh, the layer's observed range otherwise.
    pub fn for_activation(activation: Activation) -> Self {
        let range_mode = match activation {
            Activation::Tanh => RangeMode::Fixed { lo: -1.0, hi: 1.0 },
            Activation::Relu | Activation::Linear => RangeMode::PerLayerObserved,
        };
        Self {
            bins: DEFAULT_BINS,
            range_mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::input(format!("bins must be >= 2, got {}", self.bins)));
        }
        if let RangeMode::Fixed { lo, hi } = self.range_mode {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::input(format!("fixed range needs lo < hi, got [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// One symbol per sample. Symbols are dense ids assigned in order of first
/// appearance, so equal inputs always produce equal codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteCode {
    symbols: Vec<u32>,
    distinct: usize,
}

impl DiscreteCode {
    /// Re-interns arbitrary symbols.
    pub fn from_symbols<K: std::hash::Hash + Eq + Clone>(raw: &[K]) -> Self {
        let mut ids: HashMap<K, u32> = HashMap::new();
        let symbols = raw
            .iter()
            .map(|k| {
                let next = ids.len() as u32;
                *ids.entry(k.clone()).or_insert(next)
            })
            .collect();
        Self {
            symbols,
            distinct: ids.len(),
        }
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn distinct(&self) -> usize {
        self.distinct
    }
}

#[inline]
fn bin_index(v: f64, lo: f64, hi: f64, bins: usize) -> u16 {
    if !(hi > lo) {
        return 0;
    }
    let b = (bins as f64 * (v - lo) / (hi - lo)).floor();
    b.clamp(0.0, (bins - 1) as f64) as u16
}

/// Quantizes `values` (units x samples) into per-sample codes using a fixed
/// `[lo, hi]`. Out-of-range values clamp to the edge bins; a degenerate
/// range sends everything to bin 0.
pub fn discretize_in_range<T: Real>(values: &Matrix<T>, bins: usize, lo: f64, hi: f64) -> DiscreteCode {
    let rows: Vec<Vec<u16>> = (0..values.cols())
        .map(|j| values.col(j).iter().map(|&v| bin_index(v.as_f64(), lo, hi, bins)).collect())
        .collect();
    DiscreteCode::from_symbols(&rows)
}

/// Quantizes one snapshot. Observed range modes use the snapshot's own
/// min/max; [`info_plane`] resolves them across a whole run instead.
pub fn discretize<T: Real>(s: &ActivationSnapshot<T>, cfg: &BinningConfig) -> Result<DiscreteCode> {
    cfg.validate()?;
    let (lo, hi) = match cfg.range_mode {
        RangeMode::Fixed { lo, hi } => (lo, hi),
        RangeMode::PerLayerObserved | RangeMode::GlobalObserved => s.observed_range(),
    };
    Ok(discretize_in_range(&s.values, cfg.bins, lo, hi))
}

fn entropy_of_counts<'a>(counts: impl Iterator<Item = &'a usize>, total: usize) -> f64 {
    let n = total as f64;
    let h: f64 = counts
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

fn counts(symbols: &[u32], distinct: usize) -> Vec<usize> {
    let mut c = vec![0usize; distinct];
    for &s in symbols {
        c[s as usize] += 1;
    }
    c
}

/// Plug-in entropy `-sum p log2 p` of the code distribution.
pub fn entropy_discrete(c: &DiscreteCode) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    entropy_of_counts(counts(&c.symbols, c.distinct).iter(), c.len())
}

/// `H(T | G)` for an arbitrary grouping variable `G`.
fn conditional_entropy(c: &DiscreteCode, groups: &[usize]) -> f64 {
    let m = c.len();
    let mut by_group: Vec<Vec<u32>> = Vec::new();
    for (&s, &g) in c.symbols.iter().zip(groups) {
        if g >= by_group.len() {
            by_group.resize_with(g + 1, Vec::new);
        }
        by_group[g].push(s);
    }
    by_group
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| {
            let w = g.len() as f64 / m as f64;
            w * entropy_of_counts(counts(g, c.distinct).iter(), g.len())
        })
        .sum()
}

/// `I(X;T) = H(T)` for a deterministic encoder over distinct inputs.
pub fn mi_xt(c: &DiscreteCode) -> f64 {
    entropy_discrete(c)
}

/// `I(X;T) = H(T) - H(T|X)` with `inputs[i]` an identifier of sample `i`'s
/// input. Equal to [`mi_xt`] when all identifiers are distinct.
pub fn mi_xt_general(c: &DiscreteCode, inputs: &[usize]) -> Result<f64> {
    if inputs.len() != c.len() {
        return Err(Error::input(format!(
            "{} input ids for {} codes",
            inputs.len(),
            c.len()
        )));
    }
    let dense = DiscreteCode::from_symbols(inputs);
    let groups: Vec<usize> = dense.symbols.iter().map(|&s| s as usize).collect();
    let v = entropy_discrete(c) - conditional_entropy(c, &groups);
    Ok(clamp_tiny_negative(v))
}

fn clamp_tiny_negative(v: f64) -> f64 {
    if v < 0.0 && v > -1e-12 {
        0.0
    } else {
        v
    }
}

/// `I(T;Y) = H(T) - sum_y p(y) H(T | Y = y)`.
pub fn mi_ty(c: &DiscreteCode, labels: &[usize]) -> Result<f64> {
    if labels.len() != c.len() {
        return Err(Error::input(format!("{} labels for {} codes", labels.len(), c.len())));
    }
    if c.is_empty() {
        return Ok(0.0);
    }
    Ok(clamp_tiny_negative(entropy_discrete(c) - conditional_entropy(c, labels)))
}

/// Entropy of a label list in bits.
pub fn label_entropy(labels: &[usize]) -> f64 {
    entropy_discrete(&DiscreteCode::from_symbols(labels))
}

/// One hidden layer's position in the information plane at one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoPlanePoint {
    pub epoch: usize,
    pub layer: usize,
    pub mi_xt_bits: f64,
    pub mi_ty_bits: f64,
}

pub const INFO_PLANE_CSV_HEADER: &str = "epoch,layer,mi_xt_bits,mi_ty_bits";

pub fn write_info_plane_csv<W: Write>(points: &[InfoPlanePoint], mut w: W) -> Result<()> {
    writeln!(w, "{INFO_PLANE_CSV_HEADER}")?;
    for p in points {
        writeln!(w, "{},{},{},{}", p.epoch, p.layer, p.mi_xt_bits, p.mi_ty_bits)?;
    }
    Ok(())
}

/// How `I(X;T)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputMiMode {
    /// `H(T)`; valid for deterministic encoders over distinct inputs.
    #[default]
    Deterministic,
    /// `H(T) - H(T|X)` with `X` the sample index.
    General,
}

/// Information-plane points for every snapshot, sorted by `(epoch, layer)`.
///
/// Observed ranges are resolved over the whole list: per layer across all
/// epochs, or globally.
pub fn info_plane<T: Real>(
    snapshots: &[ActivationSnapshot<T>],
    labels: &[usize],
    cfg: &BinningConfig,
) -> Result<Vec<InfoPlanePoint>> {
    info_plane_with(snapshots, labels, cfg, InputMiMode::Deterministic)
}

pub fn info_plane_with<T: Real>(
    snapshots: &[ActivationSnapshot<T>],
    labels: &[usize],
    cfg: &BinningConfig,
    mode: InputMiMode,
) -> Result<Vec<InfoPlanePoint>> {
    cfg.validate()?;
    if let Some(s) = snapshots.iter().find(|s| s.samples() != labels.len()) {
        return Err(Error::input(format!(
            "snapshot epoch {} layer {} has {} samples, {} labels given",
            s.epoch,
            s.layer,
            s.samples(),
            labels.len()
        )));
    }
    let global = observed_range(snapshots.iter());
    let mut layer_ranges: HashMap<usize, (f64, f64)> = HashMap::new();
    if cfg.range_mode == RangeMode::PerLayerObserved {
        for s in snapshots {
            let (lo, hi) = s.observed_range();
            let e = layer_ranges.entry(s.layer).or_insert((lo, hi));
            e.0 = e.0.min(lo);
            e.1 = e.1.max(hi);
        }
    }
    let sample_ids: Vec<usize> = (0..labels.len()).collect();
    let mut points = snapshots
        .iter()
        .map(|s| {
            let (lo, hi) = match cfg.range_mode {
                RangeMode::Fixed { lo, hi } => (lo, hi),
                RangeMode::PerLayerObserved => layer_ranges[&s.layer],
                RangeMode::GlobalObserved => global,
            };
            let code = discretize_in_range(&s.values, cfg.bins, lo, hi);
            let mi_xt_bits = match mode {
                InputMiMode::Deterministic => mi_xt(&code),
                InputMiMode::General => mi_xt_general(&code, &sample_ids)?,
            };
            Ok(InfoPlanePoint {
                epoch: s.epoch,
                layer: s.layer,
                mi_xt_bits,
                mi_ty_bits: mi_ty(&code, labels)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    points.sort_by_key(|p| (p.epoch, p.layer));
    Ok(points)
}
