use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::golden::golden_section_min;
use super::softmax_with_temperature;
use crate::error::{Error, Result};
use crate::metrics::{kl_divergence, KlDirection, PredictionMap};
use crate::types::{CategoricalDist, Example, PredictionRecord};

/// A strictly positive, finite softmax temperature.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Temperature(f64);

impl Temperature {
    pub const ONE: Temperature = Temperature(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::invalid(format!(
                "temperature must be positive and finite, got {value}"
            )));
        }
        Ok(Temperature(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Temperature {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Temperature::new(v)
    }
}

impl From<Temperature> for f64 {
    fn from(t: Temperature) -> f64 {
        t.0
    }
}

impl fmt::Display for Temperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// What the calibration targets are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetType {
    /// Empirical distribution of the annotation counts.
    #[default]
    SoftCounts,
    /// One-hot at the hard label, or at the majority label when only counts exist.
    HardOnehot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    #[serde(default)]
    pub direction: KlDirection,
    /// Search interval for `log10(T)`.
    #[serde(default = "default_bounds")]
    pub log10_bounds: (f64, f64),
    /// Absolute tolerance on `T`.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub target_type: TargetType,
}

fn default_bounds() -> (f64, f64) {
    (-2.0, 2.0)
}

fn default_tolerance() -> f64 {
    1e-6
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            direction: KlDirection::GoldVsPred,
            log10_bounds: default_bounds(),
            tolerance: default_tolerance(),
            target_type: TargetType::SoftCounts,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.log10_bounds;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!(
                "log10 temperature bounds ({lo}, {hi}) not ordered"
            )));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::Config("temperature tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// A fitted temperature with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureFit {
    pub temperature: Temperature,
    pub fit: FitConfig,
    /// Summed KL at the fitted temperature.
    pub objective: f64,
}

/// Number of points in the post-search verification grid.
pub const VERIFICATION_GRID: usize = 100;

fn target_dist(ex: &Example, target_type: TargetType, k: usize) -> Result<CategoricalDist> {
    match target_type {
        TargetType::SoftCounts => ex.gold_dist().ok_or_else(|| {
            Error::invalid(format!(
                "example `{}` has no annotation counts; use target_type=hard_onehot",
                ex.id
            ))
        }),
        TargetType::HardOnehot => {
            let l = ex
                .gold_label()
                .ok_or_else(|| Error::invalid(format!("example `{}` has no label", ex.id)))?;
            if l >= k {
                return Err(Error::invalid(format!("label {l} out of range on `{}`", ex.id)));
            }
            Ok(CategoricalDist::point_mass(k, l))
        }
    }
}

fn single_logits(rec: &PredictionRecord) -> Result<&[f64]> {
    match rec.logit_sets.as_slice() {
        [z] => Ok(z),
        _ => Err(Error::invalid(format!(
            "record `{}` has {} logit vectors; temperature scaling applies to a single model's \
             logits, so aggregate-then-calibrate is not supported",
            rec.id,
            rec.k()
        ))),
    }
}

fn aligned_pairs<'a>(
    records: &'a [PredictionRecord],
    targets: &[Example],
    target_type: TargetType,
) -> Result<Vec<(&'a [f64], CategoricalDist)>> {
    let by_id: HashMap<&str, &PredictionRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    targets
        .iter()
        .map(|ex| {
            let rec = by_id
                .get(ex.id.as_str())
                .ok_or_else(|| Error::MissingPrediction(ex.id.clone()))?;
            let z = single_logits(rec)?;
            let t = target_dist(ex, target_type, z.len())?;
            if t.k() != z.len() {
                return Err(Error::DimensionMismatch {
                    expected: z.len(),
                    got: t.k(),
                });
            }
            Ok((z, t))
        })
        .collect()
}

fn summed_kl(pairs: &[(&[f64], CategoricalDist)], t: Temperature, direction: KlDirection) -> f64 {
    let terms: Vec<f64> = pairs
        .par_iter()
        .map(|(z, target)| {
            softmax_with_temperature(z, t)
                .and_then(|p| kl_divergence(target, &p, direction))
                .unwrap_or(f64::NAN)
        })
        .collect();
    terms.iter().sum()
}

/// Summed KL between temperature-scaled predictions and the targets.
pub fn fit_objective(
    records: &[PredictionRecord],
    targets: &[Example],
    cfg: &FitConfig,
    t: Temperature,
) -> Result<f64> {
    let pairs = aligned_pairs(records, targets, cfg.target_type)?;
    Ok(summed_kl(&pairs, t, cfg.direction))
}

/// Fits the temperature minimizing summed KL to the targets.
///
/// Golden-section search on `log10 T` inside the configured bounds, followed
/// by a check against a 100-point grid over the same bounds. If a grid point
/// beats the search, the search is rerun inside that grid cell.
pub fn fit_temperature(
    records: &[PredictionRecord],
    targets: &[Example],
    cfg: &FitConfig,
) -> Result<TemperatureFit> {
    cfg.validate()?;
    if targets.is_empty() {
        return Err(Error::Fit("empty target set".into()));
    }
    let pairs = aligned_pairs(records, targets, cfg.target_type)?;
    let objective = |log_t: f64| summed_kl(&pairs, Temperature(10f64.powf(log_t)), cfg.direction);

    let (lo, hi) = cfg.log10_bounds;
    // dT = T ln(10) d(log10 T) is largest at the upper bound.
    let log_tol = cfg.tolerance / (std::f64::consts::LN_10 * 10f64.powf(hi));
    let mut best = golden_section_min(objective, lo, hi, log_tol);

    let step = (hi - lo) / (VERIFICATION_GRID - 1) as f64;
    let grid: Vec<(f64, f64)> = (0..VERIFICATION_GRID)
        .map(|i| {
            let x = lo + step * i as f64;
            (x, objective(x))
        })
        .collect();
    if grid.iter().any(|(_, v)| !v.is_finite()) || !best.fx.is_finite() {
        return Err(Error::Fit(
            "objective is not finite over the search bounds".into(),
        ));
    }
    let (gi, &(gx, gv)) = grid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .unwrap();
    if gv < best.fx {
        let a = grid[gi.saturating_sub(1)].0;
        let b = grid[(gi + 1).min(VERIFICATION_GRID - 1)].0;
        let refined = golden_section_min(objective, a, b, log_tol);
        best = if refined.fx <= gv {
            refined
        } else {
            super::GoldenResult {
                x: gx,
                fx: gv,
                evaluations: refined.evaluations,
            }
        };
    }
    Ok(TemperatureFit {
        temperature: Temperature::new(10f64.powf(best.x))?,
        fit: *cfg,
        objective: best.fx,
    })
}

/// Temperature-scaled softmax of every single-model record.
pub fn apply_temperature(records: &[PredictionRecord], t: Temperature) -> Result<PredictionMap> {
    records
        .iter()
        .map(|r| Ok((r.id.clone(), softmax_with_temperature(single_logits(r)?, t)?)))
        .collect()
}
