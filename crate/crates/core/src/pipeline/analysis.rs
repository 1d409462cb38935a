//! Entropy-quantile curves and per-example inspection.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::plot::{LineChart, Series};
use crate::error::{Error, Result};
use crate::io;
use crate::metrics::{
    curves_to_csv, entropy_quantile, js_distance, kl_divergence, EntropyCurve, KlDirection, PredictionMap,
};
use crate::types::{CategoricalDist, Example, LabelSpace};

/// Name of the series built from annotation counts.
pub const HUMAN_SERIES: &str = "human";

/// Entropy curves for each named prediction set plus the human series.
///
/// Every prediction set must cover exactly the soft-labeled examples of `gold`.
pub fn entropy_curves(named: &[(String, PredictionMap)], gold: &[Example]) -> Result<Vec<EntropyCurve>> {
    let soft: Vec<&Example> = gold.iter().filter(|e| e.counts.is_some()).collect();
    if soft.is_empty() {
        return Err(Error::invalid("gold split has no annotation counts"));
    }
    let ids: HashSet<&str> = soft.iter().map(|e| e.id.as_str()).collect();
    let mut sets = BTreeMap::new();
    for (name, preds) in named {
        if name == HUMAN_SERIES {
            return Err(Error::invalid(format!(
                "series name `{HUMAN_SERIES}` is reserved"
            )));
        }
        if let Some(extra) = preds.keys().find(|id| !ids.contains(id.as_str())) {
            return Err(Error::invalid(format!(
                "series `{name}` has a prediction for `{extra}`, which is not in the gold split"
            )));
        }
        let dists = soft
            .iter()
            .map(|e| {
                preds.get(&e.id).cloned().ok_or_else(|| {
                    Error::invalid(format!("series `{name}` lacks a prediction for `{}`", e.id))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if sets.insert(name.clone(), dists).is_some() {
            return Err(Error::invalid(format!("duplicate series name `{name}`")));
        }
    }
    sets.insert(
        HUMAN_SERIES.to_string(),
        soft.iter()
            .map(|e| e.gold_dist().expect("filtered on counts"))
            .collect(),
    );
    entropy_quantile(&sets)
}

pub fn entropy_chart(curves: &[EntropyCurve]) -> LineChart {
    LineChart {
        title: "Entropy quantile curve".into(),
        x_label: "rank".into(),
        y_label: "entropy (nats)".into(),
        series: curves
            .iter()
            .map(|c| Series {
                name: c.series.clone(),
                points: c.points.iter().map(|&(r, h)| (r as f64, h)).collect(),
            })
            .collect(),
    }
}

/// Reads named prediction files, builds the curves and writes
/// `entropy_curve.csv` and `entropy_curve.svg` into `out`.
pub fn cmd_entropy_curve(
    files: &[(String, PathBuf)],
    gold: &[Example],
    labels: &LabelSpace,
    out: &Path,
) -> Result<Vec<EntropyCurve>> {
    let named = files
        .iter()
        .map(|(name, path)| Ok((name.clone(), io::read_prediction_file(path, labels)?.to_map()?)))
        .collect::<Result<Vec<_>>>()?;
    let curves = entropy_curves(&named, gold)?;
    io::write_bytes(&out.join("entropy_curve.csv"), curves_to_csv(&curves).as_bytes())?;
    io::write_bytes(
        &out.join("entropy_curve.svg"),
        entropy_chart(&curves).to_svg().as_bytes(),
    )?;
    Ok(curves)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodView {
    pub name: String,
    pub dist: CategoricalDist,
    pub kl: f64,
    pub jsd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Omission {
    pub name: String,
    pub reason: String,
}

/// Gold and predicted distributions of a single example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectReport {
    pub id: String,
    pub labels: Vec<String>,
    pub gold: CategoricalDist,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u64>>,
    pub methods: Vec<MethodView>,
    pub omitted: Vec<Omission>,
}

impl InspectReport {
    pub fn render_text(&self) -> String {
        let width = self
            .methods
            .iter()
            .map(|m| m.name.len())
            .chain([HUMAN_SERIES.len() + 6])
            .max()
            .unwrap_or(8);
        let mut s = String::new();
        let _ = writeln!(s, "example {}", self.id);
        let _ = write!(s, "{:width$}", "");
        for l in &self.labels {
            let _ = write!(s, " {l:>13}");
        }
        let _ = writeln!(s, " {:>8} {:>8}", "KL", "JSD");
        let row = |s: &mut String, name: &str, d: &CategoricalDist| {
            let _ = write!(s, "{name:width$}");
            for p in d.probs() {
                let _ = write!(s, " {p:>13.2}");
            }
        };
        row(&mut s, "human", &self.gold);
        s.push('\n');
        for m in &self.methods {
            row(&mut s, &m.name, &m.dist);
            let _ = writeln!(s, " {:>8.4} {:>8.4}", m.kl, m.jsd);
        }
        for o in &self.omitted {
            let _ = writeln!(s, "{:width$} omitted: {}", o.name, o.reason);
        }
        s
    }
}

fn is_not_found(e: &Error) -> bool {
    matches!(e, Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
}

/// Per-example comparison across prediction files. Files that do not exist
/// or lack the example are reported as omissions.
pub fn cmd_inspect(
    files: &[(String, PathBuf)],
    gold: &[Example],
    labels: &LabelSpace,
    id: &str,
    direction: KlDirection,
) -> Result<InspectReport> {
    let ex = gold
        .iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::UnknownId(id.to_string()))?;
    let gold_dist = ex
        .gold_dist()
        .ok_or_else(|| Error::invalid(format!("example `{id}` has no annotation counts")))?;
    let mut methods = Vec::new();
    let mut omitted = Vec::new();
    for (name, path) in files {
        let map = match io::read_prediction_file(path, labels) {
            Ok(f) => f.to_map()?,
            Err(e) if is_not_found(&e) => {
                omitted.push(Omission {
                    name: name.clone(),
                    reason: format!("file {} not found", path.display()),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        match map.get(id) {
            Some(d) => methods.push(MethodView {
                name: name.clone(),
                dist: d.clone(),
                kl: kl_divergence(&gold_dist, d, direction)?,
                jsd: js_distance(d, &gold_dist)?,
            }),
            None => omitted.push(Omission {
                name: name.clone(),
                reason: "no prediction for this example".into(),
            }),
        }
    }
    Ok(InspectReport {
        id: id.to_string(),
        labels: labels.labels().to_vec(),
        gold: gold_dist,
        counts: ex.counts.as_ref().map(|c| c.counts().to_vec()),
        methods,
        omitted,
    })
}
