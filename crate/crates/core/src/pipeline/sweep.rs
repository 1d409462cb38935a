use std::fmt::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method};
use super::plot::{LineChart, Series};
use super::run::{
    aggregate_records, ensemble_records, eval_options, mc_records, mean_std, prepare_bundle, train_member,
};
use crate::error::{Error, Result};
use crate::io;
use crate::metrics::evaluate;
use crate::types::SplitBundle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: Method,
    pub k: usize,
    pub seed: u64,
    pub kl: f64,
    pub jsd: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    pub kl_mean: f64,
    pub kl_std: f64,
    pub jsd_mean: f64,
    pub jsd_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub method: Method,
    /// One row per `k` per seed.
    pub rows: Vec<SweepRow>,
    /// Across-seed summary per `k`, in the order given.
    pub curve: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("method,k,seed,kl,jsd,accuracy\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.method, r.k, r.seed, r.kl, r.jsd, r.accuracy
            );
        }
        s
    }

    pub fn chart(&self) -> LineChart {
        LineChart {
            title: format!("{}: mean divergence vs number of samples", self.method),
            x_label: "k".into(),
            y_label: "mean over seeds".into(),
            series: vec![
                Series {
                    name: "KL".into(),
                    points: self.curve.iter().map(|p| (p.k as f64, p.kl_mean)).collect(),
                },
                Series {
                    name: "JSD".into(),
                    points: self.curve.iter().map(|p| (p.k as f64, p.jsd_mean)).collect(),
                },
            ],
        }
    }
}

/// Scores MC dropout or an ensemble at every `k` for every seed.
///
/// Each seed draws its largest `k` once; smaller `k` use a prefix of the same
/// passes or members, so the curve isolates the effect of the sample count.
pub fn sweep_samples(bundle: &SplitBundle, cfg: &ExperimentConfig, ks: &[usize]) -> Result<SweepResult> {
    if ks.is_empty() {
        return Err(Error::Config("sample sweep needs at least one k".into()));
    }
    if ks.contains(&0) {
        return Err(Error::Config("every k must be at least 1".into()));
    }
    if !matches!(cfg.method, Method::McDropout | Method::Ensemble) {
        return Err(Error::Config(format!(
            "sample sweeps apply to mc_dropout or ensemble, not {}",
            cfg.method
        )));
    }
    cfg.validate()?;
    let k_max = *ks.iter().max().expect("non-empty");
    let test = &bundle.test_s;
    let opts = eval_options(cfg);

    let per_seed = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let records = match cfg.method {
                Method::McDropout => {
                    let base = train_member(bundle, cfg, seed, 0)?.0;
                    mc_records(&base, test, cfg, seed, k_max)?
                }
                _ => {
                    let models = (0..k_max as u64)
                        .into_par_iter()
                        .map(|m| train_member(bundle, cfg, seed, m).map(|r| r.0))
                        .collect::<Result<Vec<_>>>()?;
                    ensemble_records(&models, test)?
                }
            };
            ks.iter()
                .map(|&k| {
                    let r = evaluate(&aggregate_records(&records, k)?, test, &opts)?;
                    Ok(SweepRow {
                        method: cfg.method,
                        k,
                        seed,
                        kl: r.kl_mean,
                        jsd: r.jsd_mean,
                        accuracy: r.accuracy,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(ks.len() * cfg.seeds.len());
    for (ki, _) in ks.iter().enumerate() {
        for seed_rows in &per_seed {
            rows.push(seed_rows[ki].clone());
        }
    }
    let curve = ks
        .iter()
        .enumerate()
        .map(|(ki, &k)| {
            let kls: Vec<f64> = per_seed.iter().map(|r| r[ki].kl).collect();
            let jsds: Vec<f64> = per_seed.iter().map(|r| r[ki].jsd).collect();
            let (kl_mean, kl_std) = mean_std(&kls);
            let (jsd_mean, jsd_std) = mean_std(&jsds);
            SweepPoint {
                k,
                kl_mean,
                kl_std,
                jsd_mean,
                jsd_std,
            }
        })
        .collect();
    Ok(SweepResult {
        method: cfg.method,
        rows,
        curve,
    })
}

/// Runs the sweep and writes `sweep_<method>.csv` and `sweep_<method>.svg` into `cfg.out`.
pub fn cmd_sweep_samples(cfg: &ExperimentConfig, ks: &[usize]) -> Result<(SweepResult, Vec<PathBuf>)> {
    if ks.is_empty() {
        return Err(Error::Config("sample sweep needs at least one k".into()));
    }
    let bundle = prepare_bundle(cfg)?;
    let result = sweep_samples(&bundle, cfg, ks)?;
    let csv = cfg.out.join(format!("sweep_{}.csv", cfg.method));
    let svg = cfg.out.join(format!("sweep_{}.svg", cfg.method));
    io::write_bytes(&csv, result.to_csv().as_bytes())?;
    io::write_bytes(&svg, result.chart().to_svg().as_bytes())?;
    Ok((result, vec![csv, svg]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::run::run_seed;
    use crate::simulate::{gen_dataset, SimConfig};

    fn setup(method: Method) -> (SplitBundle, ExperimentConfig) {
        let sim = SimConfig {
            n_train: 90,
            n_dev: 30,
            n_dev_s: 10,
            n_test_s: 30,
            seed: 2,
            ..Default::default()
        };
        let mut cfg = ExperimentConfig {
            method,
            seeds: vec![3, 4],
            ..Default::default()
        };
        cfg.model.epochs = 2;
        (gen_dataset(&sim).unwrap().bundle, cfg)
    }

    #[test]
    fn one_row_per_k_per_seed() {
        let (bundle, cfg) = setup(Method::McDropout);
        let r = sweep_samples(&bundle, &cfg, &[1, 2, 5]).unwrap();
        assert_eq!(r.rows.len(), 6);
        assert_eq!(r.curve.len(), 3);
        assert_eq!(r.to_csv().lines().count(), 7);
    }

    #[test]
    fn prefix_matches_direct_run() {
        for method in [Method::McDropout, Method::Ensemble] {
            let (bundle, mut cfg) = setup(method);
            let r = sweep_samples(&bundle, &cfg, &[1, 3]).unwrap();
            for k in [1, 3] {
                cfg.k = k;
                let direct = run_seed(&bundle, &cfg, 3).unwrap();
                let row = r.rows.iter().find(|x| x.k == k && x.seed == 3).unwrap();
                assert_eq!(row.kl, direct.report.kl_mean, "{method} k={k}");
            }
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let (bundle, cfg) = setup(Method::McDropout);
        assert!(sweep_samples(&bundle, &cfg, &[]).is_err());
        assert!(sweep_samples(&bundle, &cfg, &[0]).is_err());
        let (bundle, cfg) = setup(Method::Baseline);
        assert!(matches!(
            sweep_samples(&bundle, &cfg, &[1]),
            Err(Error::Config(_))
        ));
    }
}
