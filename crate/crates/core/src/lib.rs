//! Predicting the distribution of human judgments from classifier logits.
//!
//! The crate covers the full loop on a desk-scale substrate:
//!
//! - [`types`]: labels, categorical distributions, annotation counts and the
//!   four-way split (`train`, `dev`, `dev_s`, `test_s`).
//! - [`metrics`]: KL, Jensen-Shannon distance, entropy, accuracy, correlations
//!   and entropy-quantile curves.
//! - [`estimators`]: softmax baseline, MC dropout and ensemble averaging,
//!   temperature scaling and distribution distillation.
//! - [`model`]: a small dropout MLP with backprop and a finite-difference check.
//! - [`simulate`]: synthetic annotator populations with known opinion distributions.
//! - [`pipeline`]: end-to-end experiments, sweeps, plots and reports.

pub mod error;
pub mod estimators;
pub mod io;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod simulate;
pub mod types;

pub use error::{Error, Result};
pub use estimators::{FitConfig, TargetType, Temperature, TemperatureFit};
pub use metrics::{EntropyCurve, EvalOptions, KlDirection, MetricsReport, PredictionMap};
pub use model::{Mlp, MlpConfig, Objective, TrainConfig};
pub use simulate::{GroundTruth, SimConfig};
pub use types::{
    dist_from_counts, majority_label, validate_bundle, AnnotationCounts, CategoricalDist, Example,
    LabelSpace, PredictionRecord, PredictionSource, Split, SplitBundle,
};
