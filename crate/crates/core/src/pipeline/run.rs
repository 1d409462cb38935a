use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method};
use crate::error::{Error, Result};
use crate::estimators::{
    aggregate_mean, distill_relabel, distill_train, fit_temperature, mc_dropout_logits, softmax,
    softmax_with_temperature, TargetType, Temperature, TemperatureFit,
};
use crate::io;
use crate::metrics::{evaluate, EvalOptions, MetricsReport, PredictionMap};
use crate::model::{forward_deterministic, init, train, Mlp, TrainReport};
use crate::rng::{derive_seed, key_of};
use crate::simulate::{gen_dataset, human_upper_bound, SimConfig, SimulatedBundle};
use crate::types::{CategoricalDist, Example, PredictionRecord, PredictionSource, Split, SplitBundle};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMING_FILE: &str = "timing.json";

/// The three headline metrics of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub jsd: f64,
    pub kl: f64,
    pub accuracy: f64,
}

impl From<&MetricsReport> for Scores {
    fn from(r: &MetricsReport) -> Self {
        Scores {
            jsd: r.jsd_mean,
            kl: r.kl_mean,
            accuracy: r.accuracy,
        }
    }
}

/// Mean and sample standard deviation (`n - 1`; zero for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: Scores,
    pub std: Scores,
}

impl Spread {
    pub fn of(scores: &[Scores]) -> Self {
        let col = |f: fn(&Scores) -> f64| mean_std(&scores.iter().map(f).collect::<Vec<_>>());
        let (jm, js) = col(|s| s.jsd);
        let (km, ks) = col(|s| s.kl);
        let (am, as_) = col(|s| s.accuracy);
        Spread {
            mean: Scores {
                jsd: jm,
                kl: km,
                accuracy: am,
            },
            std: Scores {
                jsd: js,
                kl: ks,
                accuracy: as_,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub report: MetricsReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<Temperature>,
    /// Epoch picked by dev accuracy for the model behind the predictions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_epoch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dev_accuracy: Option<f64>,
    pub predictions: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logits: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRun {
    pub criterion: String,
    pub seed: u64,
    pub scores: Scores,
}

/// Everything a `run` produced, excluding wall-clock times so that reruns
/// are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub method: Method,
    pub eval_split: Split,
    pub runs: Vec<SeedResult>,
    pub mean: Scores,
    pub std: Scores,
    pub best: BestRun,
    /// Split-half agreement of the annotators, one split per seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human: Option<Spread>,
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn spread(&self) -> Spread {
        Spread {
            mean: self.mean,
            std: self.std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
    pub elapsed_s: f64,
}

/// In-memory result of one seed.
#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub preds: PredictionMap,
    /// Raw logits behind `preds`, before any temperature.
    pub records: Option<Vec<PredictionRecord>>,
    pub temperature: Option<TemperatureFit>,
    pub training: Option<TrainReport>,
    pub report: MetricsReport,
}

pub fn eval_options(cfg: &ExperimentConfig) -> EvalOptions {
    EvalOptions {
        direction: cfg.eval_direction,
        ..Default::default()
    }
}

fn input_dim(bundle: &SplitBundle) -> Result<usize> {
    let first = bundle
        .train
        .first()
        .ok_or_else(|| Error::invalid("bundle has an empty train split"))?;
    Ok(first.features()?.len())
}

/// Trains ensemble member `member` of `seed` (member 0 is the baseline).
/// Initialization, batch order and dropout masks all derive from the pair.
pub fn train_member(
    bundle: &SplitBundle,
    cfg: &ExperimentConfig,
    seed: u64,
    member: u64,
) -> Result<(Mlp, TrainReport)> {
    let init_seed = derive_seed(cfg.root_seed, &[seed, key_of("init"), member]);
    let shuffle_seed = derive_seed(cfg.root_seed, &[seed, key_of("shuffle"), member]);
    let mcfg = cfg.model.mlp(input_dim(bundle)?, bundle.labels.k(), init_seed);
    train(
        &init(&mcfg)?,
        &bundle.train,
        &cfg.model.train(shuffle_seed),
        &bundle.dev,
    )
}

/// Deterministic logits of `model` for every example.
pub fn deterministic_records(model: &Mlp, examples: &[Example]) -> Result<Vec<PredictionRecord>> {
    examples
        .par_iter()
        .map(|ex| {
            Ok(PredictionRecord::deterministic(
                ex.id.clone(),
                forward_deterministic(model, ex.features()?)?,
            ))
        })
        .collect()
}

/// Examples the temperature is fitted on.
///
/// An empty `dev_s` is only acceptable for hard targets, which then fall back
/// to the hard-labeled `dev` split.
pub fn fit_examples<'a>(bundle: &'a SplitBundle, cfg: &ExperimentConfig) -> Result<&'a [Example]> {
    let mut split = bundle.split(cfg.fit_split);
    if split.is_empty() {
        match (cfg.fit.target_type, cfg.fit_split) {
            (TargetType::HardOnehot, Split::DevS) => split = &bundle.dev,
            (TargetType::SoftCounts, _) => {
                return Err(Error::Config(format!(
                    "fit split `{}` is empty; soft-label recalibration needs annotation counts \
                     (set fit.target_type to hard_onehot to fit on hard labels instead)",
                    cfg.fit_split
                )))
            }
            _ => return Err(Error::Config(format!("fit split `{}` is empty", cfg.fit_split))),
        }
    }
    let n = cfg.fit_limit.map_or(split.len(), |l| l.min(split.len()));
    Ok(&split[..n])
}

/// Fits a temperature to the deterministic logits of `model`.
pub fn recalibrate(model: &Mlp, bundle: &SplitBundle, cfg: &ExperimentConfig) -> Result<TemperatureFit> {
    let targets = fit_examples(bundle, cfg)?;
    let records = deterministic_records(model, targets)?;
    fit_temperature(&records, targets, &cfg.fit)
}

fn mc_seed(cfg: &ExperimentConfig, seed: u64, id: &str) -> u64 {
    derive_seed(cfg.root_seed, &[seed, key_of("mc-dropout"), key_of(id)])
}

/// MC dropout logits for every example, `k` passes each.
pub fn mc_records(
    model: &Mlp,
    examples: &[Example],
    cfg: &ExperimentConfig,
    seed: u64,
    k: usize,
) -> Result<Vec<PredictionRecord>> {
    examples
        .par_iter()
        .map(|ex| {
            Ok(PredictionRecord {
                id: ex.id.clone(),
                logit_sets: mc_dropout_logits(model, ex.features()?, k, mc_seed(cfg, seed, &ex.id))?,
                source: PredictionSource::McDropout,
            })
        })
        .collect()
}

/// Ensemble logits: one vector per member.
pub fn ensemble_records(models: &[Mlp], examples: &[Example]) -> Result<Vec<PredictionRecord>> {
    examples
        .par_iter()
        .map(|ex| {
            let x = ex.features()?;
            Ok(PredictionRecord {
                id: ex.id.clone(),
                logit_sets: models
                    .iter()
                    .map(|m| forward_deterministic(m, x))
                    .collect::<Result<_>>()?,
                source: PredictionSource::Ensemble,
            })
        })
        .collect()
}

/// Mean of per-vector softmax over the first `k` logit vectors of each record.
pub fn aggregate_records(records: &[PredictionRecord], k: usize) -> Result<PredictionMap> {
    records
        .iter()
        .map(|r| {
            if k == 0 || k > r.k() {
                return Err(Error::invalid(format!(
                    "record `{}` has {} logit vectors, {k} requested",
                    r.id,
                    r.k()
                )));
            }
            let dists = r.logit_sets[..k]
                .iter()
                .map(|z| softmax(z))
                .collect::<Result<Vec<CategoricalDist>>>()?;
            Ok((r.id.clone(), aggregate_mean(&dists)?))
        })
        .collect()
}

fn teacher_fn<'a>(
    model: &'a Mlp,
    t: Temperature,
) -> impl Fn(&Example) -> Result<CategoricalDist> + Sync + 'a {
    move |ex| softmax_with_temperature(&forward_deterministic(model, ex.features()?)?, t)
}

/// Relabels train with the recalibrated baseline and trains a fresh student.
pub fn distill_from(
    teacher: &Mlp,
    t: Temperature,
    bundle: &SplitBundle,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(Vec<Example>, Mlp, TrainReport)> {
    let relabeled = distill_relabel(teacher_fn(teacher, t), &bundle.train)?;
    let init_seed = derive_seed(cfg.root_seed, &[seed, key_of("student-init")]);
    let shuffle_seed = derive_seed(cfg.root_seed, &[seed, key_of("student-shuffle")]);
    let scfg = cfg.model.mlp(input_dim(bundle)?, bundle.labels.k(), init_seed);
    let (student, report) = distill_train(&scfg, &cfg.model.train(shuffle_seed), &relabeled, &bundle.dev)?;
    Ok((relabeled, student, report))
}

/// Trains, predicts and evaluates one seed of the configured method on `test_s`.
pub fn run_seed(bundle: &SplitBundle, cfg: &ExperimentConfig, seed: u64) -> Result<SeedOutcome> {
    let test = &bundle.test_s;
    if test.is_empty() {
        return Err(Error::invalid("bundle has an empty test_s split"));
    }
    let opts = eval_options(cfg);
    let finish = |preds: PredictionMap,
                  records: Option<Vec<PredictionRecord>>,
                  temperature: Option<TemperatureFit>,
                  training: Option<TrainReport>| {
        let report = evaluate(&preds, test, &opts)?;
        Ok(SeedOutcome {
            seed,
            preds,
            records,
            temperature,
            training,
            report,
        })
    };

    if cfg.method == Method::Chance {
        let u = CategoricalDist::uniform(bundle.labels.k());
        let preds = test.iter().map(|e| (e.id.clone(), u.clone())).collect();
        return finish(preds, None, None, None);
    }

    let (base, base_report) = train_member(bundle, cfg, seed, 0)?;
    match cfg.method {
        Method::Chance => unreachable!("handled above"),
        Method::Baseline => {
            let records = deterministic_records(&base, test)?;
            finish(
                aggregate_records(&records, 1)?,
                Some(records),
                None,
                Some(base_report),
            )
        }
        Method::McDropout => {
            let records = mc_records(&base, test, cfg, seed, cfg.k)?;
            let preds = if base.config.dropout_rate == 0.0 {
                aggregate_records(&records, 1)?
            } else {
                aggregate_records(&records, cfg.k)?
            };
            finish(preds, Some(records), None, Some(base_report))
        }
        Method::Ensemble => {
            let mut models = vec![base];
            for member in 1..cfg.k as u64 {
                models.push(train_member(bundle, cfg, seed, member)?.0);
            }
            let records = ensemble_records(&models, test)?;
            finish(
                aggregate_records(&records, cfg.k)?,
                Some(records),
                None,
                Some(base_report),
            )
        }
        Method::Recalibration => {
            let fit = recalibrate(&base, bundle, cfg)?;
            let records = deterministic_records(&base, test)?;
            let preds = crate::estimators::apply_temperature(&records, fit.temperature)?;
            finish(preds, Some(records), Some(fit), Some(base_report))
        }
        Method::Distillation => {
            let fit = recalibrate(&base, bundle, cfg)?;
            let (_, student, report) = distill_from(&base, fit.temperature, bundle, cfg, seed)?;
            let records = deterministic_records(&student, test)?;
            finish(
                aggregate_records(&records, 1)?,
                Some(records),
                Some(fit),
                Some(report),
            )
        }
    }
}

fn pred_name(seed: u64) -> String {
    format!("pred_seed{seed}.jsonl")
}

fn logits_name(seed: u64) -> String {
    format!("logits_seed{seed}.jsonl")
}

fn temperature_name(seed: u64) -> String {
    format!("temperature_seed{seed}.json")
}

/// Human split-half scores on `test_s`, one random split per seed.
pub fn human_spread(bundle: &SplitBundle, cfg: &ExperimentConfig) -> Result<Option<Spread>> {
    if bundle
        .test_s
        .iter()
        .any(|e| e.counts.as_ref().is_none_or(|c| c.total() < 2))
    {
        return Ok(None);
    }
    let opts = eval_options(cfg);
    let scores = cfg
        .seeds
        .par_iter()
        .map(|&s| {
            let split_seed = derive_seed(cfg.root_seed, &[s, key_of("human-split-half")]);
            human_upper_bound(&bundle.test_s, split_seed, &opts).map(|r| Scores::from(&r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(Spread::of(&scores)))
}

/// Runs every seed in parallel and assembles the manifest without touching disk.
pub fn run_experiment(
    bundle: &SplitBundle,
    cfg: &ExperimentConfig,
) -> Result<(RunManifest, Vec<SeedOutcome>)> {
    cfg.validate()?;
    let outcomes = cfg
        .seeds
        .par_iter()
        .map(|&s| run_seed(bundle, cfg, s))
        .collect::<Result<Vec<_>>>()?;

    let runs: Vec<SeedResult> = outcomes
        .iter()
        .map(|o| SeedResult {
            seed: o.seed,
            report: o.report.clone(),
            temperature: o.temperature.as_ref().map(|f| f.temperature),
            selected_epoch: o.training.as_ref().map(|t| t.selected_epoch),
            dev_accuracy: o
                .training
                .as_ref()
                .and_then(|t| t.dev_accuracy.get(t.selected_epoch).copied()),
            predictions: pred_name(o.seed),
            logits: o.records.as_ref().map(|_| logits_name(o.seed)),
        })
        .collect();
    let scores: Vec<Scores> = runs.iter().map(|r| Scores::from(&r.report)).collect();
    let spread = Spread::of(&scores);
    let best = runs
        .iter()
        .zip(&scores)
        .min_by(|a, b| a.1.kl.total_cmp(&b.1.kl))
        .map(|(r, s)| BestRun {
            criterion: "kl".into(),
            seed: r.seed,
            scores: *s,
        })
        .expect("at least one seed");

    let mut artifacts = vec![MANIFEST_FILE.to_string()];
    for o in &outcomes {
        artifacts.push(pred_name(o.seed));
        if o.records.is_some() {
            artifacts.push(logits_name(o.seed));
        }
        if o.temperature.is_some() {
            artifacts.push(temperature_name(o.seed));
        }
    }

    let manifest = RunManifest {
        config: cfg.clone(),
        method: cfg.method,
        eval_split: Split::TestS,
        runs,
        mean: spread.mean,
        std: spread.std,
        best,
        human: human_spread(bundle, cfg)?,
        artifacts,
    };
    Ok((manifest, outcomes))
}

/// Writes a simulated bundle and its ground truth into `dir`.
pub fn cmd_simulate(sim: &SimConfig, dir: &Path) -> Result<SimulatedBundle> {
    let data = gen_dataset(sim)?;
    io::save_bundle(dir, &data.bundle)?;
    io::save_ground_truth(dir, &data.ground_truth)?;
    Ok(data)
}

/// Loads the configured bundle, generating it first when `sim` is set.
pub fn prepare_bundle(cfg: &ExperimentConfig) -> Result<SplitBundle> {
    match &cfg.sim {
        Some(sim) => Ok(cmd_simulate(sim, &cfg.bundle)?.bundle),
        None => io::load_bundle(&cfg.bundle),
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Full `run`: every seed, then predictions, logits, temperatures and the
/// manifest written into `cfg.out`. Wall-clock times go to a separate file.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let started = unix_now();
    let clock = Instant::now();
    cfg.validate()?;
    let bundle = prepare_bundle(cfg)?;
    let (manifest, outcomes) = run_experiment(&bundle, cfg)?;
    let out = &cfg.out;
    let ids: Vec<&str> = bundle.test_s.iter().map(|e| e.id.as_str()).collect();
    for o in &outcomes {
        io::write_predictions(&out.join(pred_name(o.seed)), &ids, &o.preds)?;
        if let Some(records) = &o.records {
            io::write_records(&out.join(logits_name(o.seed)), &bundle.labels, records)?;
        }
        if let Some(fit) = &o.temperature {
            io::write_json(&out.join(temperature_name(o.seed)), fit)?;
        }
    }
    io::write_json(&out.join(MANIFEST_FILE), &manifest)?;
    io::write_json(
        &out.join(TIMING_FILE),
        &Timing {
            started_unix_s: started,
            finished_unix_s: unix_now(),
            elapsed_s: clock.elapsed().as_secs_f64(),
        },
    )?;
    Ok(manifest)
}

/// What `distill` leaves on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillSummary {
    pub seed: u64,
    pub teacher_temperature: Temperature,
    pub teacher: MetricsReport,
    pub student: MetricsReport,
    pub student_training: TrainReport,
    pub artifacts: Vec<PathBuf>,
}

/// Distillation for the first configured seed with every intermediate
/// written out: relabeled train, teacher temperature, student checkpoint
/// and student predictions on `test_s`.
pub fn cmd_distill(cfg: &ExperimentConfig) -> Result<DistillSummary> {
    cfg.validate()?;
    let bundle = prepare_bundle(cfg)?;
    let seed = cfg.seeds[0];
    let (base, _) = train_member(&bundle, cfg, seed, 0)?;
    let fit = recalibrate(&base, &bundle, cfg)?;
    let (relabeled, student, student_training) = distill_from(&base, fit.temperature, &bundle, cfg, seed)?;

    let opts = eval_options(cfg);
    let teacher_preds = crate::estimators::apply_temperature(
        &deterministic_records(&base, &bundle.test_s)?,
        fit.temperature,
    )?;
    let student_preds = aggregate_records(&deterministic_records(&student, &bundle.test_s)?, 1)?;
    let teacher = evaluate(&teacher_preds, &bundle.test_s, &opts)?;
    let student_report = evaluate(&student_preds, &bundle.test_s, &opts)?;

    let out = &cfg.out;
    let paths = [
        out.join("train_relabeled.jsonl"),
        out.join("teacher_temperature.json"),
        out.join("student.json"),
        out.join("pred_student.jsonl"),
    ];
    io::write_jsonl(&paths[0], &relabeled)?;
    io::write_json(&paths[1], &fit)?;
    student.save(&paths[2])?;
    let ids: Vec<&str> = bundle.test_s.iter().map(|e| e.id.as_str()).collect();
    io::write_predictions(&paths[3], &ids, &student_preds)?;
    Ok(DistillSummary {
        seed,
        teacher_temperature: fit.temperature,
        teacher,
        student: student_report,
        student_training,
        artifacts: paths.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{js_distance, kl_divergence};

    fn small_cfg(method: Method) -> (SplitBundle, ExperimentConfig) {
        let sim = SimConfig {
            n_train: 120,
            n_dev: 40,
            n_dev_s: 20,
            n_test_s: 40,
            seed: 5,
            ..Default::default()
        };
        let bundle = gen_dataset(&sim).unwrap().bundle;
        let mut cfg = ExperimentConfig {
            method,
            k: 3,
            seeds: vec![0, 1],
            ..Default::default()
        };
        cfg.model.epochs = 3;
        (bundle, cfg)
    }

    #[test]
    fn chance_matches_closed_form() {
        let (bundle, cfg) = small_cfg(Method::Chance);
        let (m, _) = run_experiment(&bundle, &cfg).unwrap();
        let u = CategoricalDist::uniform(3);
        let n = bundle.test_s.len() as f64;
        let (mut kl, mut jsd) = (0.0, 0.0);
        for ex in &bundle.test_s {
            let g = ex.gold_dist().unwrap();
            kl += kl_divergence(&g, &u, Default::default()).unwrap();
            jsd += js_distance(&u, &g).unwrap();
        }
        assert!((m.mean.kl - kl / n).abs() < 1e-12);
        assert!((m.mean.jsd - jsd / n).abs() < 1e-12);
        assert_eq!(m.std.kl, 0.0);
    }

    #[test]
    fn manifest_stats_match_per_seed_reports() {
        let (bundle, cfg) = small_cfg(Method::McDropout);
        let (m, outcomes) = run_experiment(&bundle, &cfg).unwrap();
        assert_eq!(m.runs.len(), cfg.seeds.len());
        let kls: Vec<f64> = m.runs.iter().map(|r| r.report.kl_mean).collect();
        let mean = (kls[0] + kls[1]) / 2.0;
        let std = ((kls[0] - mean).powi(2) + (kls[1] - mean).powi(2)).sqrt();
        assert!((m.mean.kl - mean).abs() < 1e-15);
        assert!((m.std.kl - std).abs() < 1e-15);
        assert_eq!(m.best.scores.kl, kls[0].min(kls[1]));
        for o in &outcomes {
            assert!(o.records.as_ref().unwrap().iter().all(|r| r.k() == 3));
        }
        assert!(m.human.is_some());
    }

    #[test]
    fn ensemble_member_zero_is_baseline() {
        let (bundle, cfg) = small_cfg(Method::Ensemble);
        let o = run_seed(&bundle, &cfg, 0).unwrap();
        let base = train_member(&bundle, &cfg, 0, 0).unwrap().0;
        let ex = &bundle.test_s[0];
        let rec = o.records.unwrap().into_iter().find(|r| r.id == ex.id).unwrap();
        assert_eq!(
            rec.logit_sets[0],
            forward_deterministic(&base, ex.features().unwrap()).unwrap()
        );
        assert_ne!(rec.logit_sets[0], rec.logit_sets[1]);
    }

    #[test]
    fn recalibration_keeps_accuracy() {
        let (bundle, cfg) = small_cfg(Method::Recalibration);
        let base = run_seed(
            &bundle,
            &ExperimentConfig {
                method: Method::Baseline,
                ..cfg.clone()
            },
            0,
        )
        .unwrap();
        let recal = run_seed(&bundle, &cfg, 0).unwrap();
        assert!(recal.temperature.is_some());
        assert_eq!(base.report.accuracy, recal.report.accuracy);
    }

    #[test]
    fn soft_fit_without_dev_s_suggests_hard_targets() {
        let (mut bundle, mut cfg) = small_cfg(Method::Recalibration);
        bundle.dev_s.clear();
        let err = run_seed(&bundle, &cfg, 0).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("hard_onehot")));
        cfg.fit.target_type = TargetType::HardOnehot;
        assert!(run_seed(&bundle, &cfg, 0).is_ok());
    }

    #[test]
    fn fit_limit_truncates() {
        let (bundle, mut cfg) = small_cfg(Method::Recalibration);
        cfg.fit_limit = Some(7);
        assert_eq!(fit_examples(&bundle, &cfg).unwrap().len(), 7);
        cfg.fit_limit = Some(1000);
        assert_eq!(fit_examples(&bundle, &cfg).unwrap().len(), bundle.dev_s.len());
    }

    #[test]
    fn mean_std_basics() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
