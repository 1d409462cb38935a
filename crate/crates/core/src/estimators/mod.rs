//! Distribution estimators: the softmax baseline, MC dropout and ensemble
//! aggregation, temperature scaling and distribution distillation.

mod distill;
mod golden;
mod temperature;

pub use distill::{distill_relabel, distill_train, PSEUDO_LABEL_SCALE};
pub use golden::{golden_section_min, GoldenResult};
pub use temperature::{
    apply_temperature, fit_objective, fit_temperature, FitConfig, TargetType, Temperature, TemperatureFit,
};

use crate::error::{Error, Result};
use crate::model::{forward_deterministic, forward_stochastic, Mlp};
use crate::rng::stream;
use crate::types::{CategoricalDist, LabelSpace};

/// Max-shifted softmax.
pub fn softmax(z: &[f64]) -> Result<CategoricalDist> {
    if z.is_empty() {
        return Err(Error::invalid("empty logit vector"));
    }
    if let Some(v) = z.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite logit {v}")));
    }
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let total: f64 = e.iter().sum();
    CategoricalDist::new(e.into_iter().map(|v| v / total).collect())
}

/// `softmax(z / T)`.
pub fn softmax_with_temperature(z: &[f64], t: Temperature) -> Result<CategoricalDist> {
    let scaled: Vec<f64> = z.iter().map(|v| v / t.value()).collect();
    softmax(&scaled)
}

/// Elementwise mean of several distributions over the same labels.
pub fn aggregate_mean(dists: &[CategoricalDist]) -> Result<CategoricalDist> {
    let first = dists
        .first()
        .ok_or_else(|| Error::invalid("cannot aggregate an empty list"))?;
    let k = first.k();
    if let Some(d) = dists.iter().find(|d| d.k() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: d.k(),
        });
    }
    // Summing each label's values in sorted order makes the result
    // independent of the order of `dists`.
    let mut column = Vec::with_capacity(dists.len());
    let acc: Vec<f64> = (0..k)
        .map(|j| {
            column.clear();
            column.extend(dists.iter().map(|d| d[j]));
            column.sort_by(f64::total_cmp);
            column.iter().sum()
        })
        .collect();
    let n = dists.len() as f64;
    CategoricalDist::new(acc.into_iter().map(|a| a / n).collect())
}

/// Mean of `k` softmax outputs, each from a forward pass with dropout active.
///
/// Pass `i` draws its masks from the stream `(seed, i)`, so the result is
/// reproducible and independent of evaluation order.
pub fn mc_dropout_predict(model: &Mlp, x: &[f64], k: usize, seed: u64) -> Result<CategoricalDist> {
    if !model.trained {
        return Err(Error::Untrained);
    }
    if k == 0 {
        return Err(Error::invalid("MC dropout needs at least one pass"));
    }
    if model.config.dropout_rate == 0.0 {
        // Every pass is the deterministic pass.
        return softmax(&forward_deterministic(model, x)?);
    }
    let dists = mc_dropout_logits(model, x, k, seed)?
        .iter()
        .map(|z| softmax(z))
        .collect::<Result<Vec<_>>>()?;
    aggregate_mean(&dists)
}

/// Raw logits of `k` stochastic passes.
pub fn mc_dropout_logits(model: &Mlp, x: &[f64], k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    (0..k as u64)
        .map(|pass| forward_stochastic(model, x, &mut stream(seed, &[pass])))
        .collect()
}

/// Mean of the deterministic softmax outputs of every ensemble member.
pub fn ensemble_predict(models: &[Mlp], x: &[f64]) -> Result<CategoricalDist> {
    if models.is_empty() {
        return Err(Error::invalid("empty ensemble"));
    }
    let dists = models
        .iter()
        .map(|m| {
            if !m.trained {
                return Err(Error::Untrained);
            }
            softmax(&forward_deterministic(m, x)?)
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate_mean(&dists)
}

/// `n` copies of the uniform distribution.
pub fn chance_baseline(labels: &LabelSpace, n: usize) -> Vec<CategoricalDist> {
    vec![CategoricalDist::uniform(labels.k()); n]
}
