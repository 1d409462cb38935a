use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use distnli::estimators::{apply_temperature, fit_temperature, FitConfig, TargetType};
use distnli::io;
use distnli::metrics::{evaluate, evaluate_graded, EvalOptions, KlDirection};
use distnli::pipeline::{self, ExperimentConfig, Method};
use distnli::simulate::SimConfig;
use distnli::types::{Split, SplitBundle};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "distnli",
    version,
    about = "Predict and evaluate distributions of human judgments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic bundle with known opinion distributions.
    Simulate(SimulateArgs),
    /// Train, predict and evaluate one method over every seed.
    Run(ExperimentArgs),
    /// Score MC dropout or an ensemble at several sample counts.
    SweepSamples {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Comma-separated sample counts.
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20,30")]
        ks: Vec<usize>,
    },
    /// Entropy-quantile curves of prediction files against the human counts.
    EntropyCurve {
        #[command(flatten)]
        gold: GoldArgs,
        /// Prediction file as NAME=PATH; repeatable.
        #[arg(long = "pred", value_parser = parse_named, required = true)]
        preds: Vec<(String, PathBuf)>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Show gold and predicted distributions for one example.
    Inspect {
        #[command(flatten)]
        gold: GoldArgs,
        #[arg(long = "pred", value_parser = parse_named)]
        preds: Vec<(String, PathBuf)>,
        #[arg(long)]
        id: String,
        #[arg(long, value_enum, default_value_t = Direction::GoldVsPred)]
        direction: Direction,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Fit a temperature to single-model logits.
    FitTemp {
        #[command(flatten)]
        gold: GoldArgs,
        /// Logit records (JSONL, optional label header line).
        #[arg(long)]
        logits: PathBuf,
        #[arg(long)]
        limit: Option<usize>,
        #[command(flatten)]
        fit: FitArgs,
        /// Where to write the fitted temperature.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write temperature-scaled predictions for these logits.
        #[arg(long)]
        apply_to: Option<PathBuf>,
        /// Destination of the scaled predictions.
        #[arg(long, requires = "apply_to")]
        pred_out: Option<PathBuf>,
    },
    /// Relabel train with the recalibrated baseline and train a student.
    Distill(ExperimentArgs),
    /// Score a prediction file (distributions or logit records).
    Evaluate {
        #[command(flatten)]
        gold: GoldArgs,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, value_enum, default_value_t = Direction::GoldVsPred)]
        direction: Direction,
        /// Include per-example scores.
        #[arg(long)]
        per_example: bool,
        /// Label whose probability is correlated with graded scores.
        #[arg(long, default_value_t = 0)]
        graded_label: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Markdown and CSV tables from run manifests.
    ExportReport {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    GoldVsPred,
    PredVsGold,
}

impl From<Direction> for KlDirection {
    fn from(d: Direction) -> Self {
        match d {
            Direction::GoldVsPred => KlDirection::GoldVsPred,
            Direction::PredVsGold => KlDirection::PredVsGold,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    SoftCounts,
    HardOnehot,
}

impl From<Target> for TargetType {
    fn from(t: Target) -> Self {
        match t {
            Target::SoftCounts => TargetType::SoftCounts,
            Target::HardOnehot => TargetType::HardOnehot,
        }
    }
}

#[derive(Args)]
struct GoldArgs {
    /// Bundle directory.
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, default_value = "test_s")]
    split: Split,
}

impl GoldArgs {
    fn load(&self) -> anyhow::Result<SplitBundle> {
        io::load_bundle(&self.bundle).with_context(|| format!("loading bundle {}", self.bundle.display()))
    }
}

#[derive(Args, Default)]
struct FitArgs {
    #[arg(long, value_enum)]
    target_type: Option<Target>,
    #[arg(long, value_enum)]
    fit_direction: Option<Direction>,
    /// log10 temperature search bounds as LO,HI.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    log10_bounds: Option<Vec<f64>>,
    #[arg(long)]
    tolerance: Option<f64>,
}

impl FitArgs {
    fn apply(&self, fit: &mut FitConfig) {
        if let Some(t) = self.target_type {
            fit.target_type = t.into();
        }
        if let Some(d) = self.fit_direction {
            fit.direction = d.into();
        }
        if let Some(b) = &self.log10_bounds {
            fit.log10_bounds = (b[0], b[1]);
        }
        if let Some(t) = self.tolerance {
            fit.tolerance = t;
        }
    }
}

/// Experiment settings: a JSON config file with per-flag overrides.
#[derive(Args)]
struct ExperimentArgs {
    /// ExperimentConfig JSON; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Root of every derived random stream.
    #[arg(long, env = "DISTNLI_ROOT_SEED")]
    root_seed: Option<u64>,
    #[arg(long)]
    fit_split: Option<Split>,
    #[arg(long)]
    fit_limit: Option<usize>,
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long, value_enum)]
    direction: Option<Direction>,
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Generate the bundle from this SimConfig JSON before running.
    #[arg(long)]
    simulate: Option<PathBuf>,
}

impl ExperimentArgs {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { $target = v.into(); })*
            };
        }
        set!(
            bundle => cfg.bundle,
            out => cfg.out,
            method => cfg.method,
            k => cfg.k,
            seeds => cfg.seeds,
            root_seed => cfg.root_seed,
            fit_split => cfg.fit_split,
            hidden => cfg.model.hidden_dims,
            dropout => cfg.model.dropout_rate,
            learning_rate => cfg.model.learning_rate,
            epochs => cfg.model.epochs,
            batch_size => cfg.model.batch_size,
        );
        if let Some(l) = self.fit_limit {
            cfg.fit_limit = Some(l);
        }
        if let Some(d) = self.direction {
            cfg.eval_direction = d.into();
        }
        self.fit.apply(&mut cfg.fit);
        if let Some(p) = &self.simulate {
            cfg.sim = Some(io::read_json(p).with_context(|| format!("reading {}", p.display()))?);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// SimConfig JSON; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "DISTNLI_ROOT_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_dev: Option<usize>,
    #[arg(long)]
    n_dev_s: Option<usize>,
    #[arg(long)]
    n_test_s: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long)]
    annotators: Option<u64>,
    #[arg(long)]
    feature_dim: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
}

impl SimulateArgs {
    fn resolve(&self) -> anyhow::Result<SimConfig> {
        let mut sim = match &self.config {
            Some(p) => io::read_json(p).with_context(|| format!("reading {}", p.display()))?,
            None => SimConfig::default(),
        };
        if let Some(v) = self.seed {
            sim.seed = v;
        }
        if let Some(v) = self.n_train {
            sim.n_train = v;
        }
        if let Some(v) = self.n_dev {
            sim.n_dev = v;
        }
        if let Some(v) = self.n_dev_s {
            sim.n_dev_s = v;
        }
        if let Some(v) = self.n_test_s {
            sim.n_test_s = v;
        }
        if let Some(v) = &self.alpha {
            sim.dirichlet_alpha = v.clone();
        }
        if let Some(v) = self.annotators {
            sim.annotators_per_example = v;
        }
        if let Some(v) = self.feature_dim {
            sim.feature_dim = v;
        }
        if let Some(v) = self.noise_sigma {
            sim.feature_noise_sigma = v;
        }
        sim.validate()?;
        Ok(sim)
    }
}

fn parse_named(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_string(), PathBuf::from(path)))
        }
        _ => Err(format!("expected NAME=PATH, got `{s}`")),
    }
}

fn print_text(text: &str) -> anyhow::Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn print_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    print_text(&(serde_json::to_string_pretty(value)? + "\n"))
}

fn write_or_print(out: Option<&Path>, value: &impl serde::Serialize) -> anyhow::Result<()> {
    match out {
        Some(p) => Ok(io::write_json(p, value)?),
        None => print_json(value),
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let sim = args.resolve()?;
            let data = pipeline::cmd_simulate(&sim, &args.out)?;
            let b = &data.bundle;
            print_json(&json!({
                "out": args.out,
                "seed": sim.seed,
                "train": b.train.len(),
                "dev": b.dev.len(),
                "dev_s": b.dev_s.len(),
                "test_s": b.test_s.len(),
            }))
        }
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let m = pipeline::cmd_run(&cfg)?;
            print_json(&json!({
                "method": m.method,
                "mean": m.mean,
                "std": m.std,
                "best": m.best,
                "human": m.human,
                "manifest": cfg.out.join(pipeline::run::MANIFEST_FILE),
            }))
        }
        Command::SweepSamples { exp, ks } => {
            let cfg = exp.resolve()?;
            let (result, paths) = pipeline::cmd_sweep_samples(&cfg, &ks)?;
            print_json(&json!({ "curve": result.curve, "files": paths }))
        }
        Command::EntropyCurve { gold, preds, out } => {
            let bundle = gold.load()?;
            let curves = pipeline::cmd_entropy_curve(&preds, bundle.split(gold.split), &bundle.labels, &out)?;
            let series: Vec<&str> = curves.iter().map(|c| c.series.as_str()).collect();
            print_json(&json!({ "series": series, "out": out }))
        }
        Command::Inspect {
            gold,
            preds,
            id,
            direction,
            json,
        } => {
            let bundle = gold.load()?;
            let report = pipeline::cmd_inspect(
                &preds,
                bundle.split(gold.split),
                &bundle.labels,
                &id,
                direction.into(),
            )?;
            if json {
                print_json(&report)
            } else {
                print_text(&report.render_text())
            }
        }
        Command::FitTemp {
            gold,
            logits,
            limit,
            fit,
            out,
            apply_to,
            pred_out,
        } => {
            let bundle = gold.load()?;
            let records = io::read_records(&logits, &bundle.labels)?;
            let targets = bundle.split(gold.split);
            let targets = &targets[..limit.map_or(targets.len(), |l| l.min(targets.len()))];
            let mut cfg = FitConfig::default();
            fit.apply(&mut cfg);
            let result = fit_temperature(&records, targets, &cfg)?;
            if let Some(path) = apply_to {
                let Some(dest) = pred_out else {
                    bail!("--apply-to needs --pred-out");
                };
                let recs = io::read_records(&path, &bundle.labels)?;
                let preds = apply_temperature(&recs, result.temperature)?;
                let ids: Vec<&str> = recs.iter().map(|r| r.id.as_str()).collect();
                io::write_predictions(&dest, &ids, &preds)?;
            }
            write_or_print(out.as_deref(), &result)
        }
        Command::Distill(args) => {
            let cfg = args.resolve()?;
            let summary = pipeline::cmd_distill(&cfg)?;
            print_json(&json!({
                "seed": summary.seed,
                "teacher_temperature": summary.teacher_temperature,
                "teacher": summary.teacher,
                "student": summary.student,
                "files": summary.artifacts,
            }))
        }
        Command::Evaluate {
            gold,
            pred,
            direction,
            per_example,
            graded_label,
            out,
        } => {
            let bundle = gold.load()?;
            let preds = io::read_prediction_file(&pred, &bundle.labels)?.to_map()?;
            let split = bundle.split(gold.split);
            if split.iter().all(|e| e.counts.is_none()) && split.iter().any(|e| e.graded.is_some()) {
                let report = evaluate_graded(&preds, split, graded_label)?;
                return write_or_print(out.as_deref(), &report);
            }
            let opts = EvalOptions {
                direction: direction.into(),
                per_example,
                graded_label: Some(graded_label),
            };
            let report = evaluate(&preds, split, &opts)?;
            write_or_print(out.as_deref(), &report)
        }
        Command::ExportReport { manifests, out } => {
            let table = pipeline::cmd_export_report(&manifests, &out)?;
            print_text(&table.to_markdown())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .chain()
                .find_map(|e| e.downcast_ref::<distnli::Error>())
                .map_or(1, |e| e.exit_code());
            ExitCode::from(code as u8)
        }
    }
}
