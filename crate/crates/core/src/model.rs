//! A small multilayer perceptron with inverted dropout, trained by
//! mini-batch gradient descent. It is the substrate for MC dropout,
//! ensembles and distillation.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, StreamRng};
use crate::types::{argmax, Example};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    #[serde(default = "default_hidden")]
    pub hidden_dims: Vec<usize>,
    pub n_labels: usize,
    #[serde(default = "default_dropout")]
    pub dropout_rate: f64,
    #[serde(default)]
    pub init_seed: u64,
}

fn default_hidden() -> Vec<usize> {
    vec![32]
}

fn default_dropout() -> f64 {
    0.1
}

impl MlpConfig {
    pub fn new(input_dim: usize, n_labels: usize) -> Self {
        MlpConfig {
            input_dim,
            hidden_dims: default_hidden(),
            n_labels,
            dropout_rate: default_dropout(),
            init_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.n_labels == 0 || self.hidden_dims.contains(&0) {
            return Err(Error::Config("layer sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden_dims);
        dims.push(self.n_labels);
        dims
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    HardCrossEntropy,
    /// KL(soft target ‖ softmax), optimized through its cross-entropy form.
    SoftKl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub objective: Objective,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-2,
            epochs: 30,
            batch_size: 32,
            objective: Objective::HardCrossEntropy,
            shuffle_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite())
            || self.epochs == 0
            || self.batch_size == 0
        {
            return Err(Error::Config(
                "learning rate, epochs and batch size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Dense layer, weights stored row-major as `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_out: usize,
    pub n_in: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(n_out: usize, n_in: usize) -> Self {
        Layer {
            n_out,
            n_in,
            weights: vec![0.0; n_out * n_in],
            bias: vec![0.0; n_out],
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.n_in)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub layers: Vec<Layer>,
}

impl ModelParams {
    fn zeros_like(&self) -> Self {
        ModelParams {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.n_out, l.n_in))
                .collect(),
        }
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend(&l.weights);
            out.extend(&l.bias);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = it.next().unwrap());
            l.bias.iter_mut().for_each(|b| *b = it.next().unwrap());
        }
    }

    fn axpy(&mut self, alpha: f64, other: &ModelParams) {
        for (l, g) in self.layers.iter_mut().zip(&other.layers) {
            l.weights
                .iter_mut()
                .zip(&g.weights)
                .for_each(|(w, gw)| *w += alpha * gw);
            l.bias
                .iter_mut()
                .zip(&g.bias)
                .for_each(|(b, gb)| *b += alpha * gb);
        }
    }

    fn check_shapes(&self, cfg: &MlpConfig) -> Result<()> {
        let dims = cfg.layer_dims();
        if self.layers.len() != dims.len() - 1 {
            return Err(Error::invalid("layer count does not match configuration"));
        }
        for (l, w) in self.layers.iter().zip(dims.windows(2)) {
            if l.n_in != w[0] || l.n_out != w[1] || l.weights.len() != w[0] * w[1] || l.bias.len() != w[1] {
                return Err(Error::invalid(format!(
                    "layer shape {}x{} does not match configuration {}x{}",
                    l.n_out, l.n_in, w[1], w[0]
                )));
            }
        }
        Ok(())
    }
}

/// Network configuration, parameters and whether training has happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub config: MlpConfig,
    pub params: ModelParams,
    pub trained: bool,
}

/// Draws fresh parameters from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
pub fn init(cfg: &MlpConfig) -> Result<Mlp> {
    cfg.validate()?;
    let mut rng = stream(cfg.init_seed, &[0x1417]);
    let layers = cfg
        .layer_dims()
        .windows(2)
        .map(|w| {
            let (n_in, n_out) = (w[0], w[1]);
            let bound = 1.0 / (n_in as f64).sqrt();
            let mut l = Layer::zeros(n_out, n_in);
            l.weights
                .iter_mut()
                .chain(l.bias.iter_mut())
                .for_each(|v| *v = rng.random_range(-bound..bound));
            l
        })
        .collect();
    Ok(Mlp {
        config: cfg.clone(),
        params: ModelParams { layers },
        trained: false,
    })
}

struct Trace {
    /// Input fed to each layer.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of the hidden layers.
    pre: Vec<Vec<f64>>,
    /// Dropout multipliers of the hidden layers (0 or 1/(1-r)).
    masks: Vec<Option<Vec<f64>>>,
    logits: Vec<f64>,
}

fn forward_trace(
    params: &ModelParams,
    dropout_rate: f64,
    x: &[f64],
    mut rng: Option<&mut StreamRng>,
) -> Trace {
    let n_hidden = params.layers.len() - 1;
    let mut trace = Trace {
        inputs: Vec::with_capacity(params.layers.len()),
        pre: Vec::with_capacity(n_hidden),
        masks: Vec::with_capacity(n_hidden),
        logits: Vec::new(),
    };
    let mut a = x.to_vec();
    for layer in &params.layers[..n_hidden] {
        let z = layer.apply(&a);
        let mut h: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
        let mask = match rng.as_deref_mut() {
            Some(r) if dropout_rate > 0.0 => {
                let keep = 1.0 - dropout_rate;
                let m: Vec<f64> = (0..h.len())
                    .map(|_| {
                        if r.random::<f64>() < dropout_rate {
                            0.0
                        } else {
                            1.0 / keep
                        }
                    })
                    .collect();
                h.iter_mut().zip(&m).for_each(|(v, s)| *v *= s);
                Some(m)
            }
            _ => None,
        };
        trace.inputs.push(std::mem::replace(&mut a, h));
        trace.pre.push(z);
        trace.masks.push(mask);
    }
    trace.logits = params.layers[n_hidden].apply(&a);
    trace.inputs.push(a);
    trace
}

fn check_input(cfg: &MlpConfig, x: &[f64]) -> Result<()> {
    if x.len() != cfg.input_dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.input_dim,
            got: x.len(),
        });
    }
    Ok(())
}

/// Logits with dropout inactive.
pub fn forward_deterministic(model: &Mlp, x: &[f64]) -> Result<Vec<f64>> {
    check_input(&model.config, x)?;
    Ok(forward_trace(&model.params, 0.0, x, None).logits)
}

/// Logits with inverted dropout applied to every hidden layer at the training rate.
pub fn forward_stochastic(model: &Mlp, x: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
    check_input(&model.config, x)?;
    Ok(forward_trace(&model.params, model.config.dropout_rate, x, Some(rng)).logits)
}

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

/// Per-example loss and its gradient with respect to the logits.
///
/// `target` is a probability vector (one-hot for the hard objective). The
/// soft objective reports KL, i.e. cross-entropy minus the target entropy,
/// which leaves the gradient unchanged.
fn loss_and_grad(z: &[f64], target: &[f64], objective: Objective) -> (f64, Vec<f64>) {
    let logp = log_softmax(z);
    let mass: f64 = target.iter().sum();
    let ce: f64 = -target.iter().zip(&logp).map(|(t, lp)| t * lp).sum::<f64>();
    let loss = match objective {
        Objective::HardCrossEntropy => ce,
        Objective::SoftKl => {
            let h: f64 = -target
                .iter()
                .filter(|&&t| t > 0.0)
                .map(|t| t * t.ln())
                .sum::<f64>();
            ce - h
        }
    };
    let grad = logp
        .iter()
        .zip(target)
        .map(|(lp, t)| lp.exp() * mass - t)
        .collect();
    (loss, grad)
}

/// Accumulates the loss gradient for one example into `grads`; returns the loss.
fn backprop(
    params: &ModelParams,
    trace: &Trace,
    target: &[f64],
    objective: Objective,
    grads: &mut ModelParams,
) -> f64 {
    let (loss, mut delta) = loss_and_grad(&trace.logits, target, objective);
    for li in (0..params.layers.len()).rev() {
        let layer = &params.layers[li];
        let g = &mut grads.layers[li];
        let input = &trace.inputs[li];
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let row = &mut g.weights[o * layer.n_in..(o + 1) * layer.n_in];
            row.iter_mut().zip(input).for_each(|(gw, a)| *gw += d * a);
            g.bias[o] += d;
        }
        if li == 0 {
            break;
        }
        let mut prev = vec![0.0; layer.n_in];
        for (o, &d) in delta.iter().enumerate() {
            let row = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
            prev.iter_mut().zip(row).for_each(|(p, w)| *p += w * d);
        }
        let h = li - 1;
        if let Some(mask) = &trace.masks[h] {
            prev.iter_mut().zip(mask).for_each(|(p, m)| *p *= m);
        }
        prev.iter_mut().zip(&trace.pre[h]).for_each(|(p, z)| {
            if *z <= 0.0 {
                *p = 0.0
            }
        });
        delta = prev;
    }
    loss
}

fn training_targets(data: &[Example], objective: Objective, k: usize) -> Result<Vec<Vec<f64>>> {
    data.iter()
        .map(|ex| match objective {
            Objective::HardCrossEntropy => {
                let l = ex.hard_label.ok_or_else(|| {
                    Error::invalid(format!("hard cross-entropy needs a hard label on `{}`", ex.id))
                })?;
                if l >= k {
                    return Err(Error::invalid(format!("label {l} out of range on `{}`", ex.id)));
                }
                let mut t = vec![0.0; k];
                t[l] = 1.0;
                Ok(t)
            }
            Objective::SoftKl => {
                let d = ex.gold_dist().ok_or_else(|| {
                    Error::invalid(format!("soft objective needs a soft label on `{}`", ex.id))
                })?;
                if d.k() != k {
                    return Err(Error::DimensionMismatch {
                        expected: k,
                        got: d.k(),
                    });
                }
                Ok(d.into_vec())
            }
        })
        .collect()
}

/// Fraction of labeled examples whose deterministic argmax hits the gold label.
pub fn label_accuracy(model: &Mlp, data: &[Example]) -> Result<f64> {
    let mut hits = 0usize;
    let mut n = 0usize;
    for ex in data {
        let Some(gold) = ex.gold_label() else {
            continue;
        };
        n += 1;
        if argmax(&forward_deterministic(model, ex.features()?)?) == gold {
            hits += 1;
        }
    }
    if n == 0 {
        return Err(Error::invalid("no labeled examples to score"));
    }
    Ok(hits as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training loss per epoch, measured with dropout active.
    pub loss_trace: Vec<f64>,
    /// Development accuracy after each epoch (empty without a dev set).
    pub dev_accuracy: Vec<f64>,
    /// Zero-based epoch whose snapshot was returned.
    pub selected_epoch: usize,
}

const SHUFFLE_STREAM: u64 = 0x5348;
const DROPOUT_STREAM: u64 = 0xD209;

/// Mini-batch gradient descent with dropout active. Returns the snapshot with
/// the highest dev accuracy (earliest on ties), or the last epoch when `dev`
/// is empty.
pub fn train(
    model: &Mlp,
    data: &[Example],
    cfg: &TrainConfig,
    dev: &[Example],
) -> Result<(Mlp, TrainReport)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    let k = model.config.n_labels;
    let targets = training_targets(data, cfg.objective, k)?;
    let xs: Vec<&[f64]> = data
        .iter()
        .map(|e| {
            let x = e.features()?;
            check_input(&model.config, x)?;
            Ok(x)
        })
        .collect::<Result<_>>()?;

    let mut current = model.clone();
    current.trained = true;
    let mut best: Option<(f64, Mlp, usize)> = None;
    let mut report = TrainReport {
        loss_trace: Vec::with_capacity(cfg.epochs),
        dev_accuracy: Vec::new(),
        selected_epoch: cfg.epochs - 1,
    };
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..cfg.epochs {
        let mut shuffle_rng = stream(cfg.shuffle_seed, &[SHUFFLE_STREAM, epoch as u64]);
        let mut dropout_rng = stream(cfg.shuffle_seed, &[DROPOUT_STREAM, epoch as u64]);
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = current.params.zeros_like();
            for &i in batch {
                let trace = forward_trace(
                    &current.params,
                    current.config.dropout_rate,
                    xs[i],
                    Some(&mut dropout_rng),
                );
                epoch_loss += backprop(&current.params, &trace, &targets[i], cfg.objective, &mut grads);
            }
            current
                .params
                .axpy(-cfg.learning_rate / batch.len() as f64, &grads);
        }
        let mean_loss = epoch_loss / data.len() as f64;
        if !mean_loss.is_finite() {
            return Err(Error::invalid(format!("training diverged at epoch {epoch}")));
        }
        report.loss_trace.push(mean_loss);
        if !dev.is_empty() {
            let acc = label_accuracy(&current, dev)?;
            report.dev_accuracy.push(acc);
            if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
                best = Some((acc, current.clone(), epoch));
            }
        }
    }
    match best {
        Some((_, snapshot, epoch)) => {
            report.selected_epoch = epoch;
            Ok((snapshot, report))
        }
        None => Ok((current, report)),
    }
}

/// Maximum relative error between backprop and central finite-difference
/// gradients (step `1e-5`) over every parameter, for one example.
///
/// Relative error is `|a - n| / max(|a| + |n|, 1e-6)`; the floor keeps
/// parameters with vanishing gradient from dividing roundoff by zero.
pub fn grad_check(model: &Mlp, x: &[f64], target: &[f64], objective: Objective) -> Result<f64> {
    check_input(&model.config, x)?;
    if target.len() != model.config.n_labels {
        return Err(Error::DimensionMismatch {
            expected: model.config.n_labels,
            got: target.len(),
        });
    }
    const H: f64 = 1e-5;
    let trace = forward_trace(&model.params, 0.0, x, None);
    let mut grads = model.params.zeros_like();
    backprop(&model.params, &trace, target, objective, &mut grads);
    let analytic = grads.to_flat();

    let base = model.params.to_flat();
    let mut probe = model.params.clone();
    let loss_at = |probe: &mut ModelParams, flat: &[f64]| {
        probe.set_flat(flat);
        let z = forward_trace(probe, 0.0, x, None).logits;
        loss_and_grad(&z, target, objective).0
    };
    let mut worst = 0.0f64;
    let mut flat = base.clone();
    for i in 0..base.len() {
        flat[i] = base[i] + H;
        let up = loss_at(&mut probe, &flat);
        flat[i] = base[i] - H;
        let down = loss_at(&mut probe, &flat);
        flat[i] = base[i];
        let numeric = (up - down) / (2.0 * H);
        let err = (analytic[i] - numeric).abs() / (analytic[i].abs() + numeric.abs()).max(1e-6);
        worst = worst.max(err);
    }
    Ok(worst)
}

impl Mlp {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).expect("model serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Loads a checkpoint and checks its parameter shapes against its configuration.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Mlp = serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            source,
        })?;
        model.config.validate()?;
        model.params.check_shapes(&model.config)?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dropout: f64, seed: u64) -> MlpConfig {
        MlpConfig {
            input_dim: 4,
            hidden_dims: vec![6, 5],
            n_labels: 3,
            dropout_rate: dropout,
            init_seed: seed,
        }
    }

    /// Two well-separated blobs per class on the first three axes.
    fn separable(n: usize) -> Vec<Example> {
        let mut rng = stream(99, &[]);
        (0..n)
            .map(|i| {
                let label = i % 3;
                let mut x: Vec<f64> = (0..4).map(|_| rng.random_range(-0.3..0.3)).collect();
                x[label] += 2.0;
                Example::new(format!("s{i}")).with_features(x).with_label(label)
            })
            .collect()
    }

    #[test]
    fn init_is_seeded() {
        let a = init(&cfg(0.1, 1)).unwrap();
        let b = init(&cfg(0.1, 1)).unwrap();
        let c = init(&cfg(0.1, 2)).unwrap();
        assert_eq!(a.params.to_flat(), b.params.to_flat());
        assert_ne!(a.params.to_flat(), c.params.to_flat());
        let dims: Vec<(usize, usize)> = a.params.layers.iter().map(|l| (l.n_out, l.n_in)).collect();
        assert_eq!(dims, vec![(6, 4), (5, 6), (3, 5)]);
        assert!(a.params.check_shapes(&a.config).is_ok());
        assert!(init(&MlpConfig {
            dropout_rate: 1.0,
            ..cfg(0.0, 0)
        })
        .is_err());
    }

    #[test]
    fn deterministic_forward() {
        let mut m = init(&cfg(0.1, 3)).unwrap();
        let x = [0.5, -1.0, 2.0, 0.1];
        let a = forward_deterministic(&m, &x).unwrap();
        assert_eq!(a, forward_deterministic(&m, &x).unwrap());
        assert!(a.iter().all(|v| v.is_finite()));
        assert!(forward_deterministic(&m, &x[..3]).is_err());
        m.params.set_flat(&vec![0.0; m.params.n_params()]);
        assert_eq!(forward_deterministic(&m, &x).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn stochastic_forward() {
        let x = [0.5, -1.0, 2.0, 0.1];
        let no_drop = init(&cfg(0.0, 3)).unwrap();
        let mut rng = stream(1, &[]);
        assert_eq!(
            forward_stochastic(&no_drop, &x, &mut rng).unwrap(),
            forward_deterministic(&no_drop, &x).unwrap()
        );
        let m = init(&cfg(0.3, 3)).unwrap();
        let a = forward_stochastic(&m, &x, &mut stream(5, &[])).unwrap();
        let b = forward_stochastic(&m, &x, &mut stream(5, &[])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dropout_activations_are_zero_or_scaled() {
        let m = init(&cfg(0.25, 4)).unwrap();
        let x = [1.0, 0.5, -0.5, 0.2];
        let det = forward_trace(&m.params, 0.0, &x, None);
        let mut rng = stream(8, &[]);
        let sto = forward_trace(&m.params, 0.25, &x, Some(&mut rng));
        // First hidden layer sees identical input in both passes.
        let det_h = &det.inputs[1];
        let sto_h = &sto.inputs[1];
        for (d, s) in det_h.iter().zip(sto_h) {
            assert!(*s == 0.0 || (s - d / 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn inverted_dropout_is_unbiased_for_linear_readout() {
        // One hidden layer with positive pre-activations: the logits are linear
        // in the dropped activations, so their expectation equals the deterministic pass.
        let mut m = init(&MlpConfig {
            input_dim: 2,
            hidden_dims: vec![8],
            n_labels: 3,
            dropout_rate: 0.2,
            init_seed: 11,
        })
        .unwrap();
        for b in &mut m.params.layers[0].bias {
            *b = 3.0;
        }
        let x = [0.3, -0.2];
        let det = forward_deterministic(&m, &x).unwrap();
        let n = 10_000;
        let mut rng = stream(21, &[]);
        let mut acc = [0.0; 3];
        let mut sq = [0.0; 3];
        for _ in 0..n {
            let z = forward_stochastic(&m, &x, &mut rng).unwrap();
            for j in 0..3 {
                acc[j] += z[j];
                sq[j] += z[j] * z[j];
            }
        }
        for j in 0..3 {
            let mean = acc[j] / n as f64;
            let var = sq[j] / n as f64 - mean * mean;
            let se = (var / n as f64).sqrt();
            assert!(
                (mean - det[j]).abs() < 4.0 * se + 1e-12,
                "{j}: {mean} vs {}",
                det[j]
            );
        }
    }

    #[test]
    fn training_fits_separable_data() {
        let data = separable(100);
        let mut c = cfg(0.0, 5);
        c.hidden_dims = vec![16];
        let m = init(&c).unwrap();
        let tc = TrainConfig {
            shuffle_seed: 2,
            ..Default::default()
        };
        let (trained, report) = train(&m, &data, &tc, &data).unwrap();
        assert!(trained.trained);
        assert_eq!(report.loss_trace.len(), 30);
        let rises = report.loss_trace.windows(2).filter(|w| w[1] > w[0]).count();
        assert!(rises <= 2, "{:?}", report.loss_trace);
        assert_eq!(label_accuracy(&trained, &data).unwrap(), 1.0);
    }

    #[test]
    fn soft_one_hot_matches_hard_objective() {
        let data = separable(60);
        let soft: Vec<Example> = data
            .iter()
            .map(|e| {
                let mut c = vec![0u64; 3];
                c[e.hard_label.unwrap()] = 1;
                e.clone()
                    .with_counts(crate::types::AnnotationCounts::new(c).unwrap())
            })
            .collect();
        let m = init(&cfg(0.1, 6)).unwrap();
        let hard_cfg = TrainConfig {
            epochs: 5,
            shuffle_seed: 3,
            ..Default::default()
        };
        let soft_cfg = TrainConfig {
            objective: Objective::SoftKl,
            ..hard_cfg.clone()
        };
        let (a, ra) = train(&m, &data, &hard_cfg, &[]).unwrap();
        let (b, rb) = train(&m, &soft, &soft_cfg, &[]).unwrap();
        assert_eq!(ra.loss_trace, rb.loss_trace);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn objective_label_mismatch() {
        let data = separable(10);
        let m = init(&cfg(0.1, 6)).unwrap();
        let tc = TrainConfig {
            objective: Objective::SoftKl,
            ..Default::default()
        };
        assert!(matches!(train(&m, &data, &tc, &[]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn training_is_deterministic() {
        let data = separable(40);
        let m = init(&cfg(0.2, 7)).unwrap();
        let tc = TrainConfig {
            epochs: 4,
            shuffle_seed: 9,
            ..Default::default()
        };
        let (a, _) = train(&m, &data, &tc, &data).unwrap();
        let (b, _) = train(&m, &data, &tc, &data).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grad_check_both_objectives() {
        let data = separable(60);
        let m = init(&cfg(0.1, 8)).unwrap();
        let tc = TrainConfig {
            epochs: 5,
            ..Default::default()
        };
        let (trained, _) = train(&m, &data, &tc, &[]).unwrap();
        let x = data[4].features().unwrap();
        let hard = grad_check(&trained, x, &[0.0, 1.0, 0.0], Objective::HardCrossEntropy).unwrap();
        let soft = grad_check(&trained, x, &[0.2, 0.5, 0.3], Objective::SoftKl).unwrap();
        assert!(hard < 1e-4, "{hard}");
        assert!(soft < 1e-4, "{soft}");
        let degenerate = grad_check(&trained, &[0.0; 4], &[0.0; 3], Objective::SoftKl).unwrap();
        assert!(degenerate.is_finite());
    }

    #[test]
    fn checkpoint_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = init(&cfg(0.1, 10)).unwrap();
        m.save(&path).unwrap();
        assert_eq!(Mlp::load(&path).unwrap(), m);

        let mut broken = m.clone();
        broken.params.layers[1].bias.pop();
        broken.save(&path).unwrap();
        assert!(Mlp::load(&path).is_err());
    }
}
