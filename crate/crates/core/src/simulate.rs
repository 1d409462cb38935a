//! Synthetic annotator populations.
//!
//! Each example has a true opinion distribution `p*` drawn from a Dirichlet.
//! Its features are a fixed random linear map of the noisy, centered log of
//! `p*`, so the ambiguity of an example is partly visible to a model.
//! Train and dev examples carry one sampled annotation; the soft-labeled
//! splits carry counts from a full annotator pool.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvalOptions, MetricsReport, PredictionMap};
use crate::rng::{key_of, stream, StreamRng};
use crate::types::{
    dist_from_counts, AnnotationCounts, CategoricalDist, Example, LabelSpace, Split, SplitBundle,
};

/// Probabilities are clamped to `[LOGIT_CLAMP, 1 - LOGIT_CLAMP]` before taking logs.
pub const LOGIT_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_train: usize,
    pub n_dev: usize,
    pub n_dev_s: usize,
    pub n_test_s: usize,
    pub dirichlet_alpha: Vec<f64>,
    pub annotators_per_example: u64,
    pub feature_dim: usize,
    pub feature_noise_sigma: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_train: 500,
            n_dev: 2000,
            n_dev_s: 100,
            n_test_s: 1000,
            dirichlet_alpha: vec![1.0; 3],
            annotators_per_example: 100,
            feature_dim: 16,
            feature_noise_sigma: 0.5,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn n_labels(&self) -> usize {
        self.dirichlet_alpha.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_dev == 0 || self.n_dev_s == 0 || self.n_test_s == 0 {
            return Err(Error::Config("every split needs at least one example".into()));
        }
        if self.dirichlet_alpha.len() < 2 || self.dirichlet_alpha.iter().any(|a| a.is_nan() || *a <= 0.0) {
            return Err(Error::Config(
                "dirichlet_alpha needs >= 2 positive entries".into(),
            ));
        }
        if self.annotators_per_example == 0 || self.feature_dim == 0 {
            return Err(Error::Config(
                "annotator count and feature_dim must be positive".into(),
            ));
        }
        if self.feature_noise_sigma.is_nan() || self.feature_noise_sigma < 0.0 {
            return Err(Error::Config("feature_noise_sigma must be >= 0".into()));
        }
        Ok(())
    }

    /// Label space matching `dirichlet_alpha`: NLI names for three labels,
    /// `label0..` otherwise.
    pub fn label_space(&self) -> LabelSpace {
        if self.n_labels() == 3 {
            LabelSpace::nli()
        } else {
            LabelSpace::new((0..self.n_labels()).map(|i| format!("label{i}")))
                .expect("at least two distinct labels")
        }
    }
}

/// True opinion distribution of one example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub id: String,
    pub p_star: CategoricalDist,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedBundle {
    pub bundle: SplitBundle,
    pub ground_truth: Vec<GroundTruth>,
}

/// Draws from a Dirichlet by normalizing independent gamma variates.
pub fn sample_dirichlet(alpha: &[f64], rng: &mut StreamRng) -> CategoricalDist {
    let draws: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
        .collect();
    CategoricalDist::from_weights(&draws)
        .unwrap_or_else(|_| CategoricalDist::point_mass(alpha.len(), rng.random_range(0..alpha.len())))
}

fn sample_label(p: &CategoricalDist, rng: &mut StreamRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &q) in p.probs().iter().enumerate() {
        acc += q;
        if u < acc {
            return i;
        }
    }
    // Rounding left u above the cumulative sum; take the last label with mass.
    p.probs().iter().rposition(|&q| q > 0.0).unwrap_or(0)
}

/// Multinomial draw of `n` annotations from `p_star`.
pub fn sample_annotations(p_star: &CategoricalDist, n: u64, rng: &mut StreamRng) -> AnnotationCounts {
    let mut counts = vec![0u64; p_star.k()];
    for _ in 0..n.max(1) {
        counts[sample_label(p_star, rng)] += 1;
    }
    AnnotationCounts::new(counts).expect("at least one draw")
}

fn split_key(split: Split) -> u64 {
    key_of(split.file_stem())
}

/// Generates the four-way split and the per-example ground truth.
pub fn gen_dataset(cfg: &SimConfig) -> Result<SimulatedBundle> {
    cfg.validate()?;
    let k = cfg.n_labels();
    let labels = cfg.label_space();

    let mut map_rng = stream(cfg.seed, &[key_of("mixing-matrix")]);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let scale = 1.0 / (k as f64).sqrt();
    let mixing: Vec<f64> = (0..cfg.feature_dim * k)
        .map(|_| unit.sample(&mut map_rng) * scale)
        .collect();
    let noise =
        Normal::new(0.0, cfg.feature_noise_sigma.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;

    let mut ground_truth = Vec::new();
    let mut make_split = |split: Split, n: usize| -> Vec<Example> {
        (0..n)
            .map(|i| {
                let mut rng = stream(cfg.seed, &[split_key(split), i as u64]);
                let id = format!("{}-{:05}", split.file_stem(), i);
                let p_star = sample_dirichlet(&cfg.dirichlet_alpha, &mut rng);
                let mut logit: Vec<f64> = p_star
                    .probs()
                    .iter()
                    .map(|p| p.clamp(LOGIT_CLAMP, 1.0 - LOGIT_CLAMP).ln())
                    .collect();
                let mean = logit.iter().sum::<f64>() / k as f64;
                for v in &mut logit {
                    *v += noise.sample(&mut rng) - mean;
                }
                let features: Vec<f64> = mixing
                    .chunks_exact(k)
                    .map(|row| row.iter().zip(&logit).map(|(m, v)| m * v).sum())
                    .collect();
                let mut ex = Example::new(id.clone()).with_features(features);
                match split {
                    Split::Train | Split::Dev => {
                        ex.hard_label = Some(sample_label(&p_star, &mut rng));
                    }
                    Split::DevS | Split::TestS => {
                        ex.counts = Some(sample_annotations(&p_star, cfg.annotators_per_example, &mut rng));
                    }
                }
                ground_truth.push(GroundTruth { id, p_star });
                ex
            })
            .collect()
    };
    let train = make_split(Split::Train, cfg.n_train);
    let dev = make_split(Split::Dev, cfg.n_dev);
    let dev_s = make_split(Split::DevS, cfg.n_dev_s);
    let test_s = make_split(Split::TestS, cfg.n_test_s);
    Ok(SimulatedBundle {
        bundle: SplitBundle {
            labels,
            train,
            dev,
            dev_s,
            test_s,
        },
        ground_truth,
    })
}

/// Split-half agreement of the annotator pool with itself.
///
/// Each example's annotations are shuffled and cut in two; the first half's
/// empirical distribution is scored as a prediction against the second half.
pub fn human_upper_bound(test_s: &[Example], seed: u64, opts: &EvalOptions) -> Result<MetricsReport> {
    let mut preds = PredictionMap::new();
    let mut golds = Vec::with_capacity(test_s.len());
    for ex in test_s {
        let counts = ex
            .counts
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("example `{}` has no counts", ex.id)))?;
        if counts.total() < 2 {
            return Err(Error::invalid(format!(
                "example `{}` needs at least two annotations to split",
                ex.id
            )));
        }
        let mut pool: Vec<usize> = counts
            .counts()
            .iter()
            .enumerate()
            .flat_map(|(label, &c)| std::iter::repeat_n(label, c as usize))
            .collect();
        pool.shuffle(&mut stream(seed, &[key_of(&ex.id)]));
        let (a, b) = pool.split_at(pool.len() / 2);
        let tally = |half: &[usize]| {
            let mut c = vec![0u64; counts.k()];
            half.iter().for_each(|&l| c[l] += 1);
            AnnotationCounts::new(c).expect("non-empty half")
        };
        preds.insert(ex.id.clone(), dist_from_counts(&tally(a)));
        golds.push(Example::new(ex.id.clone()).with_counts(tally(b)));
    }
    evaluate(&preds, &golds, opts)
}
