//! Divergences, accuracy, correlations and entropy curves for scoring
//! predicted distributions against soft human labels.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{majority_label, AnnotationCounts, CategoricalDist, Example};

/// Floor applied to the denominator distribution inside KL.
pub const KL_EPSILON: f64 = 1e-12;

/// Which argument of KL plays the role of the reference distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlDirection {
    /// KL(gold ‖ pred).
    #[default]
    GoldVsPred,
    /// KL(pred ‖ gold).
    PredVsGold,
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, got: b });
    }
    Ok(())
}

/// `Σ a_i ln(a_i / max(b_i, ε))` with `0 ln 0 = 0`. Natural log.
pub fn kl(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    let v: f64 = a
        .iter()
        .zip(b)
        .filter(|(&ai, _)| ai > 0.0)
        .map(|(&ai, &bi)| ai * (ai / bi.max(KL_EPSILON)).ln())
        .sum();
    Ok(v.max(0.0))
}

/// KL divergence between a gold and a predicted distribution, oriented by `direction`.
pub fn kl_divergence(gold: &CategoricalDist, pred: &CategoricalDist, direction: KlDirection) -> Result<f64> {
    match direction {
        KlDirection::GoldVsPred => kl(gold.probs(), pred.probs()),
        KlDirection::PredVsGold => kl(pred.probs(), gold.probs()),
    }
}

/// Jensen-Shannon distance: square root of the base-2 JS divergence. In [0, 1].
pub fn js_distance(p: &CategoricalDist, q: &CategoricalDist) -> Result<f64> {
    check_dims(p.k(), q.k())?;
    let half_kl = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .filter(|(&ai, _)| ai > 0.0)
            .map(|(&ai, &bi)| {
                let m = 0.5 * (ai + bi);
                ai * (ai / m).log2()
            })
            .sum()
    };
    let div = 0.5 * (half_kl(p.probs(), q.probs()) + half_kl(q.probs(), p.probs()));
    Ok(div.clamp(0.0, 1.0).sqrt())
}

/// Shannon entropy in nats.
pub fn entropy(p: &CategoricalDist) -> f64 {
    -p.probs()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// Fraction of examples whose predicted argmax equals the majority annotator label.
pub fn accuracy(preds: &[CategoricalDist], golds: &[AnnotationCounts]) -> Result<f64> {
    if preds.len() != golds.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} gold labels",
            preds.len(),
            golds.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::invalid("accuracy of an empty set"));
    }
    let hits = preds
        .iter()
        .zip(golds)
        .filter(|(p, g)| p.argmax() == majority_label(g))
        .count();
    Ok(hits as f64 / preds.len() as f64)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("correlation inputs differ in length"));
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two points".into()));
    }
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant sequence".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based fractional ranks; tied values share their average rank.
pub fn fractional_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson of fractional ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("correlation inputs differ in length"));
    }
    pearson(&fractional_ranks(xs), &fractional_ranks(ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub direction: KlDirection,
    /// Keep the per-example records in the report.
    pub per_example: bool,
    /// Correlate the predicted probability of this label with graded scores.
    pub graded_label: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            direction: KlDirection::GoldVsPred,
            per_example: false,
            graded_label: Some(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleScore {
    pub id: String,
    pub jsd: f64,
    pub kl: f64,
    pub pred: CategoricalDist,
    pub gold: CategoricalDist,
}

/// Aggregate scores of a prediction set over one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub jsd_mean: f64,
    pub kl_mean: f64,
    pub accuracy: f64,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub n_examples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_example: Option<Vec<ExampleScore>>,
}

/// Fixed-order pairwise summation.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Predictions keyed by example id.
pub type PredictionMap = HashMap<String, CategoricalDist>;

/// Scores predictions against the soft labels of `split`.
///
/// Divergences and accuracy use every example with annotation counts.
/// When `graded_label` is set and the split carries graded scores, the
/// predicted probability of that label is correlated with them.
pub fn evaluate(preds: &PredictionMap, split: &[Example], opts: &EvalOptions) -> Result<MetricsReport> {
    for ex in split {
        if !preds.contains_key(&ex.id) {
            return Err(Error::MissingPrediction(ex.id.clone()));
        }
    }
    let scored: Vec<&Example> = split.iter().filter(|e| e.counts.is_some()).collect();
    if scored.is_empty() {
        return Err(Error::invalid("split has no examples with annotation counts"));
    }
    let rows = scored
        .par_iter()
        .map(|ex| {
            let pred = &preds[&ex.id];
            let gold = ex.gold_dist().expect("filtered on counts");
            let kl = kl_divergence(&gold, pred, opts.direction)?;
            let jsd = js_distance(pred, &gold)?;
            let hit = pred.argmax() == majority_label(ex.counts.as_ref().unwrap());
            Ok((
                ExampleScore {
                    id: ex.id.clone(),
                    jsd,
                    kl,
                    pred: pred.clone(),
                    gold,
                },
                hit,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = rows.len();
    let jsds: Vec<f64> = rows.iter().map(|(r, _)| r.jsd).collect();
    let kls: Vec<f64> = rows.iter().map(|(r, _)| r.kl).collect();
    let hits = rows.iter().filter(|(_, h)| *h).count();

    let (mut pearson_r, mut spearman_r) = (None, None);
    if let Some(label) = opts.graded_label {
        let graded: Vec<&Example> = split.iter().filter(|e| e.graded.is_some()).collect();
        if !graded.is_empty() {
            let (xs, ys) = graded_pairs(preds, &graded, label)?;
            pearson_r = Some(pearson(&xs, &ys)?);
            spearman_r = Some(spearman(&xs, &ys)?);
        }
    }

    Ok(MetricsReport {
        jsd_mean: pairwise_sum(&jsds) / n as f64,
        kl_mean: pairwise_sum(&kls) / n as f64,
        accuracy: hits as f64 / n as f64,
        pearson: pearson_r,
        spearman: spearman_r,
        n_examples: n,
        per_example: opts
            .per_example
            .then(|| rows.into_iter().map(|(r, _)| r).collect()),
    })
}

fn graded_pairs(preds: &PredictionMap, graded: &[&Example], label: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::with_capacity(graded.len());
    let mut ys = Vec::with_capacity(graded.len());
    for ex in graded {
        let p = preds
            .get(&ex.id)
            .ok_or_else(|| Error::MissingPrediction(ex.id.clone()))?;
        if label >= p.k() {
            return Err(Error::DimensionMismatch {
                expected: p.k(),
                got: label + 1,
            });
        }
        xs.push(p[label]);
        ys.push(ex.graded.unwrap());
    }
    Ok((xs, ys))
}

/// Correlations between a label's predicted probability and graded scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub pearson: f64,
    pub spearman: f64,
    pub n_examples: usize,
}

/// Correlation-only scoring for splits that carry graded scores rather than counts.
pub fn evaluate_graded(preds: &PredictionMap, split: &[Example], label: usize) -> Result<CorrelationReport> {
    let graded: Vec<&Example> = split.iter().filter(|e| e.graded.is_some()).collect();
    if graded.is_empty() {
        return Err(Error::invalid("split has no graded scores"));
    }
    let (xs, ys) = graded_pairs(preds, &graded, label)?;
    Ok(CorrelationReport {
        pearson: pearson(&xs, &ys)?,
        spearman: spearman(&xs, &ys)?,
        n_examples: xs.len(),
    })
}

/// One series of prediction entropies sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyCurve {
    pub series: String,
    /// `(rank, entropy)` with entropies non-decreasing in rank.
    pub points: Vec<(usize, f64)>,
}

impl EntropyCurve {
    pub fn entropies(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|&(_, h)| h)
    }
}

/// Builds one entropy-quantile curve per named prediction set.
pub fn entropy_quantile(sets: &BTreeMap<String, Vec<CategoricalDist>>) -> Result<Vec<EntropyCurve>> {
    if sets.is_empty() {
        return Err(Error::invalid("no prediction sets"));
    }
    let n = sets.values().next().unwrap().len();
    if n == 0 {
        return Err(Error::invalid("empty prediction set"));
    }
    let mut curves = Vec::with_capacity(sets.len());
    for (name, dists) in sets {
        if dists.len() != n {
            return Err(Error::invalid(format!(
                "series `{name}` has {} predictions, expected {n}",
                dists.len()
            )));
        }
        let mut hs: Vec<f64> = dists.iter().map(entropy).collect();
        hs.sort_by(f64::total_cmp);
        curves.push(EntropyCurve {
            series: name.clone(),
            points: hs.into_iter().enumerate().collect(),
        });
    }
    Ok(curves)
}

/// `rank,entropy,series` rows for a set of curves.
pub fn curves_to_csv(curves: &[EntropyCurve]) -> String {
    let mut out = String::from("rank,entropy,series\n");
    for c in curves {
        for &(r, h) in &c.points {
            out.push_str(&format!("{r},{h},{}\n", c.series));
        }
    }
    out
}
