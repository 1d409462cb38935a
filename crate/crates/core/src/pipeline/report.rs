use std::fmt::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{RunManifest, Scores};
use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub scores: Scores,
    /// Across-seed standard deviation, for mean rows.
    pub std: Option<Scores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub rows: Vec<ReportRow>,
}

/// Mean and best rows per manifest, followed by the human split-half row
/// when any manifest carries one.
pub fn build_report(manifests: &[RunManifest]) -> Result<ReportTable> {
    if manifests.is_empty() {
        return Err(Error::invalid("no manifests to report"));
    }
    let mut rows = Vec::new();
    for m in manifests {
        rows.push(ReportRow {
            name: format!("{} (mean)", m.method),
            scores: m.mean,
            std: Some(m.std),
        });
        rows.push(ReportRow {
            name: format!("{} (best, seed {})", m.method, m.best.seed),
            scores: m.best.scores,
            std: None,
        });
    }
    if let Some(h) = manifests.iter().find_map(|m| m.human) {
        rows.push(ReportRow {
            name: "human (split-half)".into(),
            scores: h.mean,
            std: Some(h.std),
        });
    }
    Ok(ReportTable { rows })
}

impl ReportTable {
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| Method | JSD | KL | Acc. |\n|---|---|---|---|\n");
        for r in &self.rows {
            let cell = |v: f64, sd: Option<f64>| match sd {
                Some(sd) => format!("{v:.4} ± {sd:.4}"),
                None => format!("{v:.4}"),
            };
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} |",
                r.name,
                cell(r.scores.jsd, r.std.map(|x| x.jsd)),
                cell(r.scores.kl, r.std.map(|x| x.kl)),
                cell(r.scores.accuracy, r.std.map(|x| x.accuracy)),
            );
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("method,jsd,kl,accuracy,jsd_std,kl_std,accuracy_std\n");
        for r in &self.rows {
            let sd = |f: fn(&Scores) -> f64| r.std.as_ref().map(f).map_or(String::new(), |v| v.to_string());
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.name,
                r.scores.jsd,
                r.scores.kl,
                r.scores.accuracy,
                sd(|x| x.jsd),
                sd(|x| x.kl),
                sd(|x| x.accuracy),
            );
        }
        s
    }
}

/// Reads manifests and writes `report.md` and `report.csv` into `out`.
pub fn cmd_export_report(manifests: &[PathBuf], out: &Path) -> Result<ReportTable> {
    let loaded = manifests
        .iter()
        .map(|p| io::read_json::<RunManifest>(p))
        .collect::<Result<Vec<_>>>()?;
    let table = build_report(&loaded)?;
    io::write_bytes(&out.join("report.md"), table.to_markdown().as_bytes())?;
    io::write_bytes(&out.join("report.csv"), table.to_csv().as_bytes())?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::config::{ExperimentConfig, Method};
    use crate::pipeline::run::run_experiment;
    use crate::simulate::{gen_dataset, SimConfig};

    #[test]
    fn rows_per_manifest_plus_human() {
        let sim = SimConfig {
            n_train: 30,
            n_dev: 10,
            n_dev_s: 5,
            n_test_s: 20,
            ..Default::default()
        };
        let bundle = gen_dataset(&sim).unwrap().bundle;
        let cfg = ExperimentConfig {
            method: Method::Chance,
            seeds: vec![0, 1, 2],
            ..Default::default()
        };
        let (m, _) = run_experiment(&bundle, &cfg).unwrap();
        let t = build_report(&[m.clone(), m]).unwrap();
        assert_eq!(t.rows.len(), 5);
        assert!(t.rows.last().unwrap().name.starts_with("human"));
        assert_eq!(t.to_markdown().lines().count(), 7);
        assert_eq!(t.to_csv().lines().count(), 6);
        assert!(build_report(&[]).is_err());
    }
}
