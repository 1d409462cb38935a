//! Labels, distributions, annotations, examples and the four-way split.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of a [`CategoricalDist`].
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Ordered label names. The order is the tie-break order everywhere.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LabelSpaceRepr", into = "LabelSpaceRepr")]
pub struct LabelSpace {
    labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct LabelSpaceRepr {
    labels: Vec<String>,
}

impl TryFrom<LabelSpaceRepr> for LabelSpace {
    type Error = Error;
    fn try_from(r: LabelSpaceRepr) -> Result<Self> {
        LabelSpace::new(r.labels)
    }
}

impl From<LabelSpace> for LabelSpaceRepr {
    fn from(l: LabelSpace) -> Self {
        LabelSpaceRepr { labels: l.labels }
    }
}

impl LabelSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::invalid(format!(
                "label space needs at least 2 labels, got {}",
                labels.len()
            )));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::invalid(format!("duplicate label `{l}`")));
            }
        }
        Ok(LabelSpace { labels })
    }

    /// entailment / neutral / contradiction.
    pub fn nli() -> Self {
        LabelSpace {
            labels: vec!["entailment".into(), "neutral".into(), "contradiction".into()],
        }
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == name)
    }
}

impl Default for LabelSpace {
    fn default() -> Self {
        Self::nli()
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// A probability vector over the label space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CategoricalDist(Vec<f64>);

impl TryFrom<Vec<f64>> for CategoricalDist {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        CategoricalDist::new(v)
    }
}

impl From<CategoricalDist> for Vec<f64> {
    fn from(d: CategoricalDist) -> Self {
        d.0
    }
}

impl CategoricalDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("empty distribution"));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::invalid(format!(
                "probability {p} is negative or non-finite"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(CategoricalDist(probs))
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::invalid(
                "weights must be non-negative with positive finite sum",
            ));
        }
        CategoricalDist::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(k: usize) -> Self {
        CategoricalDist(vec![1.0 / k as f64; k])
    }

    pub fn point_mass(k: usize, at: usize) -> Self {
        let mut v = vec![0.0; k];
        v[at] = 1.0;
        CategoricalDist(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for CategoricalDist {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Per-label annotator counts for one example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct AnnotationCounts(Vec<u64>);

impl TryFrom<Vec<u64>> for AnnotationCounts {
    type Error = Error;
    fn try_from(v: Vec<u64>) -> Result<Self> {
        AnnotationCounts::new(v)
    }
}

impl From<AnnotationCounts> for Vec<u64> {
    fn from(c: AnnotationCounts) -> Self {
        c.0
    }
}

impl AnnotationCounts {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.iter().sum::<u64>() == 0 {
            return Err(Error::invalid("annotation counts must sum to at least 1"));
        }
        Ok(AnnotationCounts(counts))
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }
}

/// Empirical label distribution of an annotation pool.
pub fn dist_from_counts(counts: &AnnotationCounts) -> CategoricalDist {
    let total = counts.total() as f64;
    CategoricalDist(counts.0.iter().map(|&c| c as f64 / total).collect())
}

/// Most frequent label; ties go to the lowest index.
pub fn majority_label(counts: &AnnotationCounts) -> usize {
    let mut best = 0;
    for (i, &c) in counts.0.iter().enumerate().skip(1) {
        if c > counts.0[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextPair {
    pub premise: String,
    pub hypothesis: String,
}

/// One dataset item. Serialized as one JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    #[serde(default)]
    pub features: Option<Vec<f64>>,
    #[serde(default)]
    pub text: Option<TextPair>,
    #[serde(rename = "label", default)]
    pub hard_label: Option<usize>,
    #[serde(rename = "label_counts", default)]
    pub counts: Option<AnnotationCounts>,
    #[serde(default)]
    pub graded: Option<f64>,
}

impl Example {
    pub fn new(id: impl Into<String>) -> Self {
        Example {
            id: id.into(),
            features: None,
            text: None,
            hard_label: None,
            counts: None,
            graded: None,
        }
    }

    pub fn with_features(mut self, x: Vec<f64>) -> Self {
        self.features = Some(x);
        self
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.hard_label = Some(label);
        self
    }

    pub fn with_counts(mut self, counts: AnnotationCounts) -> Self {
        self.counts = Some(counts);
        self
    }

    pub fn with_graded(mut self, g: f64) -> Self {
        self.graded = Some(g);
        self
    }

    /// Soft label from annotation counts, if any.
    pub fn gold_dist(&self) -> Option<CategoricalDist> {
        self.counts.as_ref().map(dist_from_counts)
    }

    /// Gold label for accuracy: the explicit hard label if present,
    /// otherwise the majority of the annotation counts.
    pub fn gold_label(&self) -> Option<usize> {
        self.hard_label
            .or_else(|| self.counts.as_ref().map(majority_label))
    }

    pub fn features(&self) -> Result<&[f64]> {
        self.features
            .as_deref()
            .ok_or_else(|| Error::invalid(format!("example `{}` has no feature vector", self.id)))
    }
}

/// Which split an example belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    DevS,
    TestS,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Dev, Split::DevS, Split::TestS];

    pub fn file_stem(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::DevS => "dev_s",
            Split::TestS => "test_s",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_stem())
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|sp| sp.file_stem() == s)
            .ok_or_else(|| Error::invalid(format!("unknown split `{s}`")))
    }
}

/// Train / dev (hard labels) and the small soft-labeled dev and test splits.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitBundle {
    pub labels: LabelSpace,
    pub train: Vec<Example>,
    pub dev: Vec<Example>,
    pub dev_s: Vec<Example>,
    pub test_s: Vec<Example>,
}

impl SplitBundle {
    pub fn split(&self, which: Split) -> &[Example] {
        match which {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::DevS => &self.dev_s,
            Split::TestS => &self.test_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub split: Split,
    pub id: String,
    pub problem: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} `{}`: {}", self.split, self.id, self.problem)
    }
}

/// Lists every broken bundle invariant. Empty means the bundle is well formed.
pub fn validate_bundle(bundle: &SplitBundle) -> Vec<Violation> {
    let k = bundle.labels.k();
    let mut out = Vec::new();
    let mut push = |split, id: &str, problem: String| {
        out.push(Violation {
            split,
            id: id.to_string(),
            problem,
        })
    };
    for split in Split::ALL {
        for ex in bundle.split(split) {
            if ex.hard_label.is_none() && ex.counts.is_none() && ex.graded.is_none() {
                push(split, &ex.id, "no hard label, counts or graded score".into());
            }
            if let Some(l) = ex.hard_label {
                if l >= k {
                    push(split, &ex.id, format!("hard label {l} outside [0, {k})"));
                }
            }
            if let Some(c) = &ex.counts {
                if c.k() != k {
                    push(split, &ex.id, format!("{} counts for {k} labels", c.k()));
                }
            }
            if matches!(split, Split::DevS | Split::TestS) && ex.counts.is_none() {
                push(split, &ex.id, "soft-labeled split example lacks counts".into());
            }
            if let Some(g) = ex.graded {
                if !(0.0..=1.0).contains(&g) {
                    push(split, &ex.id, format!("graded score {g} outside [0, 1]"));
                }
            }
        }
    }
    let dev_ids: HashSet<&str> = bundle.dev_s.iter().map(|e| e.id.as_str()).collect();
    for ex in &bundle.test_s {
        if dev_ids.contains(ex.id.as_str()) {
            push(Split::TestS, &ex.id, "id also present in dev_s".into());
        }
    }
    out
}

/// Where a set of logit vectors came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionSource {
    Deterministic,
    McDropout,
    Ensemble,
}

/// The raw logits produced for one example: one vector per stochastic pass
/// or ensemble member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub logit_sets: Vec<Vec<f64>>,
    pub source: PredictionSource,
}

impl PredictionRecord {
    pub fn deterministic(id: impl Into<String>, logits: Vec<f64>) -> Self {
        PredictionRecord {
            id: id.into(),
            logit_sets: vec![logits],
            source: PredictionSource::Deterministic,
        }
    }

    pub fn k(&self) -> usize {
        self.logit_sets.len()
    }

    pub fn validate(&self, k_labels: usize) -> Result<()> {
        if self.logit_sets.is_empty() {
            return Err(Error::invalid(format!(
                "record `{}` has no logit vectors",
                self.id
            )));
        }
        for z in &self.logit_sets {
            if z.len() != k_labels {
                return Err(Error::DimensionMismatch {
                    expected: k_labels,
                    got: z.len(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(v: &[u64]) -> AnnotationCounts {
        AnnotationCounts::new(v.to_vec()).unwrap()
    }

    #[test]
    fn dist_from_counts_examples() {
        let d = dist_from_counts(&counts(&[33, 66, 1]));
        for (a, b) in d.probs().iter().zip([0.33, 0.66, 0.01]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(dist_from_counts(&counts(&[100, 0, 0])).probs(), &[1.0, 0.0, 0.0]);
        let third = dist_from_counts(&counts(&[1, 1, 1]));
        assert!(third.probs().iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn all_zero_counts_rejected() {
        assert!(matches!(
            AnnotationCounts::new(vec![0, 0, 0]),
            Err(Error::InvalidInput(_))
        ));
        assert!(serde_json::from_str::<AnnotationCounts>("[0,0,0]").is_err());
    }

    #[test]
    fn majority_examples() {
        assert_eq!(majority_label(&counts(&[60, 30, 10])), 0);
        assert_eq!(majority_label(&counts(&[50, 50, 0])), 0);
        assert_eq!(majority_label(&counts(&[10, 30, 60])), 2);
        assert_eq!(majority_label(&counts(&[0, 7, 7])), 1);
    }

    #[test]
    fn label_space_rules() {
        assert!(LabelSpace::new(["a"]).is_err());
        assert!(LabelSpace::new(["a", "a"]).is_err());
        let ls = LabelSpace::new(["yes", "no"]).unwrap();
        assert_eq!(ls.k(), 2);
        assert_eq!(LabelSpace::default().labels()[2], "contradiction");
        let parsed: LabelSpace = serde_json::from_str(r#"{"labels":["x","y","z"]}"#).unwrap();
        assert_eq!(parsed.index_of("z"), Some(2));
        assert!(serde_json::from_str::<LabelSpace>(r#"{"labels":["x"]}"#).is_err());
    }

    #[test]
    fn categorical_validation() {
        assert!(CategoricalDist::new(vec![0.5, 0.6]).is_err());
        assert!(CategoricalDist::new(vec![-0.1, 1.1]).is_err());
        assert!(CategoricalDist::new(vec![f64::NAN, 1.0]).is_err());
        assert!(CategoricalDist::new(vec![0.5, 0.5 + 1e-10]).is_ok());
    }

    fn well_formed() -> SplitBundle {
        let c = counts(&[5, 3, 2]);
        SplitBundle {
            labels: LabelSpace::nli(),
            train: vec![Example::new("t0").with_label(1)],
            dev: vec![Example::new("d0").with_label(0)],
            dev_s: vec![Example::new("s0").with_counts(c.clone())],
            test_s: vec![Example::new("x0").with_counts(c)],
        }
    }

    #[test]
    fn validate_bundle_cases() {
        let ok = well_formed();
        assert!(validate_bundle(&ok).is_empty());

        let mut missing = well_formed();
        missing.test_s.push(Example::new("x1").with_label(0));
        let v = validate_bundle(&missing);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].id, "x1");
        assert_eq!(v[0].split, Split::TestS);

        let mut dup = well_formed();
        dup.test_s
            .push(Example::new("s0").with_counts(counts(&[1, 0, 0])));
        let v = validate_bundle(&dup);
        assert_eq!(v.len(), 1);
        assert!(v[0].problem.contains("dev_s"));
    }

    #[test]
    fn example_json_field_names() {
        let ex = Example::new("a").with_label(2).with_counts(counts(&[1, 2, 3]));
        let s = serde_json::to_string(&ex).unwrap();
        assert_eq!(
            s,
            r#"{"id":"a","features":null,"text":null,"label":2,"label_counts":[1,2,3],"graded":null}"#
        );
        let back: Example = serde_json::from_str(r#"{"id":"a","label":2}"#).unwrap();
        assert_eq!(back.hard_label, Some(2));
    }

    proptest! {
        #[test]
        fn counts_give_valid_dist(v in proptest::collection::vec(0u64..1000, 2..8)) {
            prop_assume!(v.iter().sum::<u64>() > 0);
            let c = counts(&v);
            let d = dist_from_counts(&c);
            prop_assert!(CategoricalDist::new(d.probs().to_vec()).is_ok());
            prop_assert_eq!(d.k(), v.len());
            prop_assert_eq!(majority_label(&c), d.argmax());
        }

        #[test]
        fn majority_scale_invariant(v in proptest::collection::vec(0u64..1000, 2..6), m in 1u64..50) {
            prop_assume!(v.iter().sum::<u64>() > 0);
            let scaled: Vec<u64> = v.iter().map(|c| c * m).collect();
            prop_assert_eq!(majority_label(&counts(&v)), majority_label(&counts(&scaled)));
        }
    }
}
