//! A small fully-connected classifier trained with minibatch SGD on mean
//! cross-entropy, recording hidden-layer activations at chosen epochs.
//!
//! Runs are single-threaded and fully determined by the config seed: the
//! initial weights come from one ChaCha stream, minibatch shuffling from
//! another.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::mi_est::ActivationSnapshot;
use crate::rates::FeatureMatrix;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    fn apply<T: Real>(self, v: T) -> T {
        match self {
            Activation::Tanh => v.tanh(),
            Activation::Relu => v.max(T::zero()),
            Activation::Linear => v,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output<T: Real>(self, a: T) -> T {
        match self {
            Activation::Tanh => T::one() - a * a,
            Activation::Relu => {
                if a > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Linear => T::one(),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::input(format!("unknown activation {other:?}"))),
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Optimizer {
    Sgd,
    SgdMomentum { mu: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub activation: Activation,
    pub num_classes: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: Optimizer,
}

impl MlpConfig {
    /// Checks the config on its own and, when given, against the training
    /// set size.
    pub fn validate(&self, train_size: Option<usize>) -> Result<()> {
        let bad = |field: &str, why: String| Err(Error::input(format!("{field}: {why}")));
        if self.input_dim == 0 {
            return bad("input_dim", "must be positive".into());
        }
        if self.hidden_widths.is_empty() {
            return bad("hidden_widths", "needs at least one hidden layer".into());
        }
        if self.hidden_widths.contains(&0) {
            return bad("hidden_widths", "widths must be positive".into());
        }
        if self.num_classes == 0 {
            return bad("num_classes", "must be positive".into());
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate", format!("must be finite and >= 0, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be positive".into());
        }
        if let Some(n) = train_size {
            if self.batch_size > n {
                return bad("batch_size", format!("{} exceeds training set size {n}", self.batch_size));
            }
        }
        if let Optimizer::SgdMomentum { mu } = self.optimizer {
            if !(0.0..1.0).contains(&mu) {
                return bad("optimizer.mu", format!("must lie in [0, 1), got {mu}"));
            }
        }
        Ok(())
    }
}

/// Geometric log schedule: `{0} U {round(r^k)}` deduplicated, with `r`
/// chosen so `points` values span `[1, epochs]`.
pub fn log_schedule(epochs: usize, points: usize) -> Vec<usize> {
    let mut out = vec![0];
    if epochs == 0 {
        return out;
    }
    let n = points.max(2);
    let r = (epochs as f64).powf(1.0 / (n - 1) as f64);
    for k in 0..n {
        let e = (r.powi(k as i32).round() as usize).clamp(1, epochs);
        if out.last() != Some(&e) {
            out.push(e);
        }
    }
    if out.last() != Some(&epochs) {
        out.push(epochs);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
struct Dense<T> {
    /// `out x in`
    weights: Matrix<T>,
    bias: Vec<T>,
}

impl<T: Real> Dense<T> {
    fn affine(&self, input: &Matrix<T>) -> Result<Matrix<T>> {
        let mut z = self.weights.matmul(input)?;
        for j in 0..z.cols() {
            for (v, &b) in z.col_mut(j).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(z)
    }
}

/// Hidden activations per layer plus class probabilities, each with one
/// column per sample.
#[derive(Debug, Clone)]
pub struct ForwardPass<T> {
    pub hidden: Vec<Matrix<T>>,
    pub probabilities: Matrix<T>,
    logits: Matrix<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    layers: Vec<Dense<T>>,
    activation: Activation,
}

/// Features (`D x n`) and their labels.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a, T> {
    pub features: &'a Matrix<T>,
    pub labels: &'a [usize],
}

impl<'a, T: Real> Samples<'a, T> {
    pub fn new(features: &'a Matrix<T>, labels: &'a [usize]) -> Result<Self> {
        if features.cols() != labels.len() {
            return Err(Error::input(format!(
                "{} samples but {} labels",
                features.cols(),
                labels.len()
            )));
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl<T: Real> Mlp<T> {
    /// Uniform `+-sqrt(6 / (fan_in + fan_out))` weights, zero biases.
    pub fn init(cfg: &MlpConfig) -> Result<Self> {
        cfg.validate(None)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut dims = vec![cfg.input_dim];
        dims.extend(&cfg.hidden_widths);
        dims.push(cfg.num_classes);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = Matrix::from_fn(fan_out, fan_in, |_, _| {
                    T::lit((2.0 * rng.random::<f64>() - 1.0) * limit)
                });
                Dense {
                    weights,
                    bias: vec![T::zero(); fan_out],
                }
            })
            .collect();
        Ok(Self {
            layers,
            activation: cfg.activation,
        })
    }

    /// Model with explicit `(weights, bias)` per layer, `weights` being
    /// `out x in`.
    pub fn from_layers(layers: Vec<(Matrix<T>, Vec<T>)>, activation: Activation) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::input("need at least one hidden layer and an output layer"));
        }
        for (i, (w, b)) in layers.iter().enumerate() {
            if w.rows() != b.len() {
                return Err(Error::input(format!("layer {i}: {} rows but {} biases", w.rows(), b.len())));
            }
            if i > 0 && layers[i - 1].0.rows() != w.cols() {
                return Err(Error::input(format!("layer {i}: input width mismatch")));
            }
        }
        Ok(Self {
            layers: layers
                .into_iter()
                .map(|(weights, bias)| Dense { weights, bias })
                .collect(),
            activation,
        })
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weights.rows())
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.weights.rows()).collect()
    }

    pub fn weights(&self, layer: usize) -> &Matrix<T> {
        &self.layers[layer].weights
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.as_slice().len() + l.bias.len()).sum()
    }

    /// Parameters flattened layer by layer, weights before biases.
    pub fn params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, p: &[T]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::input(format!(
                "{} parameters given, model has {}",
                p.len(),
                self.param_count()
            )));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.as_slice().len();
            l.weights.as_mut_slice().copy_from_slice(&p[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&p[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    /// SHA-256 of the little-endian parameter bytes.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for v in self.params() {
            h.update(v.as_f64().to_le_bytes());
        }
        hex(&h.finalize())
    }

    pub fn forward(&self, x: &Matrix<T>) -> Result<ForwardPass<T>> {
        if x.rows() != self.input_dim() {
            return Err(Error::input(format!(
                "batch has {} features, model expects {}",
                x.rows(),
                self.input_dim()
            )));
        }
        let (out_layer, hidden_layers) = self.layers.split_last().expect("model has an output layer");
        let mut hidden: Vec<Matrix<T>> = Vec::with_capacity(hidden_layers.len());
        for layer in hidden_layers {
            let mut z = layer.affine(hidden.last().unwrap_or(x))?;
            for v in z.as_mut_slice() {
                *v = self.activation.apply(*v);
            }
            hidden.push(z);
        }
        let logits = out_layer.affine(hidden.last().unwrap_or(x))?;
        Ok(ForwardPass {
            hidden,
            probabilities: softmax_columns(&logits),
            logits,
        })
    }

    /// Mean cross-entropy over the samples.
    pub fn loss(&self, s: Samples<'_, T>) -> Result<T> {
        let fp = self.forward(s.features)?;
        mean_cross_entropy(&fp.logits, s.labels)
    }

    /// Fraction of samples whose highest-probability class is the label.
    pub fn accuracy(&self, s: Samples<'_, T>) -> Result<f64> {
        if s.is_empty() {
            return Ok(0.0);
        }
        let fp = self.forward(s.features)?;
        let correct = (0..s.len())
            .filter(|&j| argmax(fp.probabilities.col(j)) == s.labels[j])
            .count();
        Ok(correct as f64 / s.len() as f64)
    }

    /// Mean cross-entropy and its gradient, flattened like [`Mlp::params`].
    pub fn loss_and_gradient(&self, s: Samples<'_, T>) -> Result<(T, Vec<T>)> {
        let (loss, grads) = self.backprop(s.features, s.labels)?;
        let mut flat = Vec::with_capacity(self.param_count());
        for (dw, db) in grads {
            flat.extend_from_slice(dw.as_slice());
            flat.extend_from_slice(&db);
        }
        Ok((loss, flat))
    }

    fn backprop(&self, x: &Matrix<T>, labels: &[usize]) -> Result<(T, Vec<(Matrix<T>, Vec<T>)>)> {
        let fp = self.forward(x)?;
        let loss = mean_cross_entropy(&fp.logits, labels)?;
        let b = x.cols();
        let inv_b = T::one() / T::from_count(b);
        let mut delta = fp.probabilities;
        for (j, &y) in labels.iter().enumerate() {
            let col = delta.col_mut(j);
            col[y] -= T::one();
            for v in col.iter_mut() {
                *v *= inv_b;
            }
        }
        let n = self.layers.len();
        let mut grads: Vec<(Matrix<T>, Vec<T>)> = Vec::with_capacity(n);
        for li in (0..n).rev() {
            let layer = &self.layers[li];
            let input = if li == 0 { x } else { &fp.hidden[li - 1] };
            let (out_dim, in_dim) = layer.weights.shape();
            let mut dw = Matrix::zeros(out_dim, in_dim);
            let mut db = vec![T::zero(); out_dim];
            for j in 0..b {
                let d = delta.col(j);
                for (acc, &v) in db.iter_mut().zip(d) {
                    *acc += v;
                }
                let a = input.col(j);
                for (k, &ak) in a.iter().enumerate() {
                    if ak == T::zero() {
                        continue;
                    }
                    for (g, &dv) in dw.col_mut(k).iter_mut().zip(d) {
                        *g += dv * ak;
                    }
                }
            }
            if li > 0 {
                let act = self.activation;
                let mut prev = Matrix::zeros(in_dim, b);
                for j in 0..b {
                    let d = delta.col(j);
                    let a = input.col(j);
                    let out = prev.col_mut(j);
                    for k in 0..in_dim {
                        out[k] = dot(layer.weights.col(k), d) * act.derivative_from_output(a[k]);
                    }
                }
                delta = prev;
            }
            grads.push((dw, db));
        }
        grads.reverse();
        Ok((loss, grads))
    }

    /// Activations of every hidden layer on `x`, as snapshots.
    pub fn snapshot(&self, x: &Matrix<T>, epoch: usize) -> Result<Vec<ActivationSnapshot<T>>> {
        let fp = self.forward(x)?;
        fp.hidden
            .into_iter()
            .enumerate()
            .map(|(layer, values)| ActivationSnapshot::new(epoch, layer, values, self.activation))
            .collect()
    }
}

fn softmax_columns<T: Real>(z: &Matrix<T>) -> Matrix<T> {
    let mut p = z.clone();
    for j in 0..p.cols() {
        let col = p.col_mut(j);
        let m = col.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let mut s = T::zero();
        for v in col.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        for v in col.iter_mut() {
            *v /= s;
        }
    }
    p
}

fn mean_cross_entropy<T: Real>(logits: &Matrix<T>, labels: &[usize]) -> Result<T> {
    if logits.cols() != labels.len() {
        return Err(Error::input("label count does not match batch"));
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= logits.rows()) {
        return Err(Error::input(format!("label {y} outside 0..{}", logits.rows())));
    }
    let mut total = T::zero();
    for (j, &y) in labels.iter().enumerate() {
        let col = logits.col(j);
        let m = col.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let lse = m + col.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
        total += lse - col[y];
    }
    Ok(total / T::from_count(labels.len().max(1)))
}

fn argmax<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    use std::fmt::Write as _;
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Max relative difference between backprop and central finite
/// differences (step `1e-5`) over all parameters.
pub fn gradient_check<T: Real>(model: &Mlp<T>, batch: Samples<'_, T>) -> Result<f64> {
    let (_, analytic) = model.loss_and_gradient(batch)?;
    let base = model.params();
    let mut probe = model.clone();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for (i, &g) in analytic.iter().enumerate() {
        let mut p = base.clone();
        p[i] = T::lit(base[i].as_f64() + h);
        probe.set_params(&p)?;
        let up = probe.loss(batch)?.as_f64();
        p[i] = T::lit(base[i].as_f64() - h);
        probe.set_params(&p)?;
        let down = probe.loss(batch)?.as_f64();
        let numeric = (up - down) / (2.0 * h);
        let g = g.as_f64();
        let denom = g.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((g - numeric).abs() / denom);
    }
    Ok(worst)
}

/// Metrics and hidden-layer snapshots at one logged epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord<T> {
    pub epoch: usize,
    /// Mean cross-entropy over the training set.
    pub loss: f64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
    pub snapshots: Vec<ActivationSnapshot<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace<T> {
    pub records: Vec<EpochRecord<T>>,
}

impl<T: Real> TrainTrace<T> {
    pub fn logged_epochs(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.epoch).collect()
    }

    pub fn snapshots(&self) -> impl Iterator<Item = &ActivationSnapshot<T>> {
        self.records.iter().flat_map(|r| r.snapshots.iter())
    }

    pub fn final_record(&self) -> Option<&EpochRecord<T>> {
        self.records.last()
    }
}

/// Minibatch SGD for `cfg.epochs` epochs. At each epoch in `log_epochs`
/// (epoch 0 is before any update) the full `eval` set is forwarded and every
/// hidden layer recorded.
pub fn train<T: Real>(
    model: &mut Mlp<T>,
    cfg: &MlpConfig,
    train_set: Samples<'_, T>,
    test_set: Option<Samples<'_, T>>,
    eval: &Matrix<T>,
    log_epochs: &[usize],
) -> Result<TrainTrace<T>> {
    cfg.validate(Some(train_set.len()))?;
    if model.input_dim() != cfg.input_dim || model.hidden_widths() != cfg.hidden_widths {
        return Err(Error::input("model shape does not match config"));
    }
    if let Some(&e) = log_epochs.iter().find(|&&e| e > cfg.epochs) {
        return Err(Error::input(format!("log epoch {e} beyond {} epochs", cfg.epochs)));
    }
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1);
    let lr = T::lit(cfg.learning_rate);
    let mut velocity: Option<Vec<(Matrix<T>, Vec<T>)>> = match cfg.optimizer {
        Optimizer::Sgd => None,
        Optimizer::SgdMomentum { .. } => Some(
            model
                .layers
                .iter()
                .map(|l| (Matrix::zeros(l.weights.rows(), l.weights.cols()), vec![T::zero(); l.bias.len()]))
                .collect(),
        ),
    };

    let mut records = Vec::with_capacity(log_epochs.len());
    let record = |model: &Mlp<T>, epoch: usize| -> Result<EpochRecord<T>> {
        Ok(EpochRecord {
            epoch,
            loss: model.loss(train_set)?.as_f64(),
            train_acc: model.accuracy(train_set)?,
            test_acc: test_set.map(|t| model.accuracy(t)).transpose()?,
            snapshots: model.snapshot(eval, epoch)?,
        })
    };
    if log_epochs.contains(&0) {
        records.push(record(model, 0)?);
    }

    let n = train_set.len();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=cfg.epochs {
        for i in (1..n).rev() {
            let j = shuffle_rng.random_range(0..=i);
            order.swap(i, j);
        }
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let xb = train_set.features.select_columns(chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| train_set.labels[i]).collect();
            let (loss, grads) = model.backprop(&xb, &yb)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, batch: bi });
            }
            apply_update(model, grads, lr, cfg.optimizer, velocity.as_mut());
        }
        if log_epochs.contains(&epoch) {
            records.push(record(model, epoch)?);
        }
    }
    Ok(TrainTrace { records })
}

fn apply_update<T: Real>(
    model: &mut Mlp<T>,
    grads: Vec<(Matrix<T>, Vec<T>)>,
    lr: T,
    opt: Optimizer,
    velocity: Option<&mut Vec<(Matrix<T>, Vec<T>)>>,
) {
    match (opt, velocity) {
        (Optimizer::SgdMomentum { mu }, Some(vel)) => {
            let mu = T::lit(mu);
            for ((layer, (dw, db)), (vw, vb)) in model.layers.iter_mut().zip(grads).zip(vel.iter_mut()) {
                for ((w, &g), v) in layer.weights.as_mut_slice().iter_mut().zip(dw.as_slice()).zip(vw.as_mut_slice()) {
                    *v = mu * *v - lr * g;
                    *w += *v;
                }
                for ((b, &g), v) in layer.bias.iter_mut().zip(&db).zip(vb.iter_mut()) {
                    *v = mu * *v - lr * g;
                    *b += *v;
                }
            }
        }
        _ => {
            for (layer, (dw, db)) in model.layers.iter_mut().zip(grads) {
                for (w, &g) in layer.weights.as_mut_slice().iter_mut().zip(dw.as_slice()) {
                    *w -= lr * g;
                }
                for (b, &g) in layer.bias.iter_mut().zip(&db) {
                    *b -= lr * g;
                }
            }
        }
    }
}

/// Contents of `meta.json` in a trace directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub config: MlpConfig,
    pub logged_epochs: Vec<usize>,
    pub dataset_name: String,
    pub dataset_checksum: String,
    /// Labels of the snapshot set, in column order.
    pub eval_labels: Vec<usize>,
    /// Snapshots come from a deterministic forward pass over distinct inputs.
    pub deterministic: bool,
}

pub const METRICS_CSV_HEADER: &str = "epoch,loss,train_acc,test_acc";

pub fn snapshot_file_name(epoch: usize, layer: usize) -> String {
    format!("e{epoch}_l{layer}.bin")
}

/// Writes `meta.json`, `metrics.csv` and one `e{epoch}_l{layer}.bin` per
/// snapshot into `dir`.
pub fn write_trace_dir<T: Real>(dir: &Path, trace: &TrainTrace<T>, meta: &TraceMeta) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut metrics = String::from(METRICS_CSV_HEADER);
    metrics.push('\n');
    for r in &trace.records {
        let test = r.test_acc.map(|v| v.to_string()).unwrap_or_default();
        metrics.push_str(&format!("{},{},{},{}\n", r.epoch, r.loss, r.train_acc, test));
        for s in &r.snapshots {
            let fm = FeatureMatrix::new(s.values.clone())?;
            let mut buf = Vec::new();
            fm.write_binary(&mut buf)?;
            fs::write(dir.join(snapshot_file_name(s.epoch, s.layer)), buf)?;
        }
    }
    fs::write(dir.join("metrics.csv"), metrics)?;
    let mut f = fs::File::create(dir.join("meta.json"))?;
    serde_json::to_writer_pretty(&mut f, meta)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Reads a trace directory back as `f64` snapshots ordered by
/// `(epoch, layer)`.
pub fn read_trace_dir(dir: &Path) -> Result<(TraceMeta, Vec<ActivationSnapshot<f64>>)> {
    let meta: TraceMeta = serde_json::from_slice(&fs::read(dir.join("meta.json"))?)?;
    let layers = meta.config.hidden_widths.len();
    let mut snaps = Vec::with_capacity(meta.logged_epochs.len() * layers);
    for &epoch in &meta.logged_epochs {
        for layer in 0..layers {
            let path = dir.join(snapshot_file_name(epoch, layer));
            let fm = FeatureMatrix::<f64>::read_binary(fs::File::open(&path)?)?;
            if fm.samples() != meta.eval_labels.len() {
                return Err(Error::Consistency(format!(
                    "{} has {} samples, meta lists {} labels",
                    path.display(),
                    fm.samples(),
                    meta.eval_labels.len()
                )));
            }
            snaps.push(ActivationSnapshot::new(epoch, layer, fm.into_matrix(), meta.config.activation)?);
        }
    }
    Ok((meta, snaps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(hidden: Vec<usize>, activation: Activation) -> MlpConfig {
        MlpConfig {
            input_dim: 2,
            hidden_widths: hidden,
            activation,
            num_classes: 2,
            seed: 7,
            learning_rate: 0.1,
            batch_size: 4,
            epochs: 3,
            optimizer: Optimizer::Sgd,
        }
    }

    fn toy() -> (Matrix<f64>, Vec<usize>) {
        let x = Matrix::from_fn(2, 8, |i, j| ((i * 8 + j) as f64 * 0.77).sin());
        let y = (0..8).map(|j| usize::from(x[(0, j)] > 0.0)).collect();
        (x, y)
    }

    #[test]
    fn parameter_count() {
        let m = Mlp::<f64>::init(&cfg(vec![3], Activation::Tanh)).unwrap();
        assert_eq!(m.param_count(), 17);
    }

    #[test]
    fn same_seed_same_model() {
        let a = Mlp::<f64>::init(&cfg(vec![3, 2], Activation::Tanh)).unwrap();
        let b = Mlp::<f64>::init(&cfg(vec![3, 2], Activation::Tanh)).unwrap();
        assert_eq!(a.checksum(), b.checksum());
        let mut c2 = cfg(vec![3, 2], Activation::Tanh);
        c2.seed = 8;
        assert_ne!(a.checksum(), Mlp::<f64>::init(&c2).unwrap().checksum());
    }

    #[test]
    fn zero_model_is_uniform() {
        let mut m = Mlp::<f64>::init(&cfg(vec![3], Activation::Tanh)).unwrap();
        m.set_params(&vec![0.0; m.param_count()]).unwrap();
        let (x, _) = toy();
        let fp = m.forward(&x).unwrap();
        for j in 0..x.cols() {
            assert_eq!(fp.probabilities.col(j), &[0.5, 0.5]);
        }
    }

    #[test]
    fn linear_identity_passes_input_through() {
        let m = Mlp::from_layers(
            vec![
                (Matrix::identity(2), vec![0.0; 2]),
                (Matrix::identity(2), vec![0.0; 2]),
            ],
            Activation::Linear,
        )
        .unwrap();
        let (x, _) = toy();
        assert_eq!(m.forward(&x).unwrap().hidden[0], x);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let m = Mlp::<f64>::init(&cfg(vec![3], Activation::Tanh)).unwrap();
        assert!(m.forward(&Matrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn config_validation_names_field() {
        let mut c = cfg(vec![], Activation::Tanh);
        assert!(c.validate(None).unwrap_err().to_string().contains("hidden_widths"));
        c.hidden_widths = vec![2];
        assert!(c.validate(Some(2)).unwrap_err().to_string().contains("batch_size"));
    }

    #[test]
    fn schedule_is_geometric_and_deduplicated() {
        let s = log_schedule(8000, 60);
        assert_eq!(s[0], 0);
        assert_eq!(*s.last().unwrap(), 8000);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(s.len() <= 61 && s.len() > 40);
        assert_eq!(log_schedule(0, 60), vec![0]);
        assert_eq!(log_schedule(3, 60), vec![0, 1, 2, 3]);
    }

    #[test]
    fn zero_epochs_logs_only_initial_state() {
        let mut c = cfg(vec![3], Activation::Tanh);
        c.epochs = 0;
        let mut m = Mlp::<f64>::init(&c).unwrap();
        let (x, y) = toy();
        let s = Samples::new(&x, &y).unwrap();
        let trace = train(&mut m, &c, s, None, &x, &log_schedule(0, 60)).unwrap();
        assert_eq!(trace.logged_epochs(), vec![0]);
        assert_eq!(trace.records[0].snapshots.len(), 1);
    }

    #[test]
    fn zero_learning_rate_keeps_loss() {
        let mut c = cfg(vec![3, 2], Activation::Tanh);
        c.learning_rate = 0.0;
        c.epochs = 5;
        let mut m = Mlp::<f64>::init(&c).unwrap();
        let (x, y) = toy();
        let s = Samples::new(&x, &y).unwrap();
        let trace = train(&mut m, &c, s, Some(s), &x, &[0, 1, 5]).unwrap();
        let l0 = trace.records[0].loss;
        assert!(trace.records.iter().all(|r| (r.loss - l0).abs() < 1e-12));
    }

    #[test]
    fn momentum_trains() {
        let mut c = cfg(vec![4], Activation::Tanh);
        c.optimizer = Optimizer::SgdMomentum { mu: 0.9 };
        c.epochs = 50;
        let mut m = Mlp::<f64>::init(&c).unwrap();
        let (x, y) = toy();
        let s = Samples::new(&x, &y).unwrap();
        let trace = train(&mut m, &c, s, None, &x, &[0, 50]).unwrap();
        assert!(trace.records[1].loss < trace.records[0].loss);
    }

    #[test]
    fn divergence_reported() {
        let mut c = cfg(vec![3], Activation::Linear);
        c.learning_rate = 1e300;
        c.epochs = 5;
        let mut m = Mlp::<f64>::init(&c).unwrap();
        let (x, y) = toy();
        let s = Samples::new(&x, &y).unwrap();
        match train(&mut m, &c, s, None, &x, &[0]) {
            Err(Error::Divergence { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn tiny_linear_gradient_check() {
        let c = MlpConfig {
            input_dim: 1,
            hidden_widths: vec![1],
            num_classes: 2,
            ..cfg(vec![1], Activation::Linear)
        };
        let m = Mlp::<f64>::init(&c).unwrap();
        let x = Matrix::from_rows(&[vec![0.4, -1.1, 0.8]]).unwrap();
        let y = vec![0, 1, 1];
        let err = gradient_check(&m, Samples::new(&x, &y).unwrap()).unwrap();
        assert!(err <= 1e-7, "{err}");
    }
}
