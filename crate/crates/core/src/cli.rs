//! Command-line front end: `train`, `eval`, `demo`, `synth` and `sweep`.
//!
//! Every command that writes files puts them under the output directory
//! (`--out`, or `TRUSTFUSE_OUT`). Files written by `train`:
//!
//! ```text
//! manifest.toml     run keys followed by the full config; `train --manifest` replays it
//! model.ckpt        checkpoint (see `Model::from_checkpoint`)
//! epochs.csv        one row per epoch (see `EpochReport::csv_header`)
//! metrics.txt       key = value metrics on the test split
//! metrics.csv       the same as one CSV row under a header
//! conflict.csv      pairwise conflict ratios between views
//! predictions.csv   index,label,predicted,uncertainty,belief1..K,trust1..V
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::{
    inject_noise, load_dataset, split, synth_conflict, write_dataset, MultiViewDataset, SynthSpec,
};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::opinion::{
    bcf_fuse_all, discounted_fuse, trust_discount, MultinomialOpinion, ReferralOpinion,
};
use crate::training::{train_with, EpochReport, Evaluation, Model, TrainConfig};

#[derive(Debug, Parser)]
#[command(
    name = "trustfuse",
    version,
    about = "Trust-discounted evidential multi-view classification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on a dataset directory and evaluate on its test split.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Reproduce the Titanic worked example and check the golden values.
    Demo,
    /// Write a synthetic multi-view dataset with optional misleading views.
    Synth(SynthArgs),
    /// Train over a grid of one hyperparameter and report mean ± std.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = "TRUSTFUSE_OUT", default_value = "trustfuse-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Default)]
pub struct ConfigArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Start from the learning rates of a benchmark dataset.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub rlr: Option<f64>,
    #[arg(long)]
    pub warmup_epochs: Option<usize>,
    /// Label-smoothing factor of the warm-up target.
    #[arg(long)]
    pub smoothing: Option<f64>,
    /// Add a view that concatenates all views.
    #[arg(long)]
    pub pseudo_view: bool,
    /// Disable trust discounting (skips stages 1 and 3).
    #[arg(long)]
    pub no_td: bool,
    /// Epochs of stages 2, 3 and 4, comma-separated.
    #[arg(long, value_parser = parse_stage_epochs)]
    pub stage_epochs: Option<[usize; 3]>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Skip feature normalization.
    #[arg(long)]
    pub no_normalize: bool,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<TrainConfig> {
        self.resolve_over(&TrainConfig::default())
    }

    /// Config file (or `base`), then preset learning rates, then flags.
    pub fn resolve_over(&self, base: &TrainConfig) -> Result<TrainConfig> {
        let mut cfg = match &self.config {
            Some(path) => TrainConfig::load(path)?,
            None => base.clone(),
        };
        if let Some(name) = &self.preset {
            let p = TrainConfig::preset(name)
                .ok_or_else(|| Error::Config(format!("unknown preset {name:?}")))?;
            cfg.lr = p.lr;
            cfg.rlr = p.rlr;
        }
        if let Some(x) = self.seed {
            cfg.seed = x;
        }
        if let Some(x) = self.lr {
            cfg.lr = x;
        }
        if let Some(x) = self.rlr {
            cfg.rlr = x;
        }
        if let Some(x) = self.warmup_epochs {
            cfg.warmup_epochs = x;
        }
        if let Some(x) = self.smoothing {
            cfg.smoothing_eta = x;
        }
        if let Some(x) = self.stage_epochs {
            cfg.stage_epochs = x;
        }
        if let Some(x) = self.batch_size {
            cfg.batch_size = x;
        }
        cfg.use_pseudo_view |= self.pseudo_view;
        cfg.use_td &= !self.no_td;
        cfg.normalize &= !self.no_normalize;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_stage_epochs(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    parts.try_into().map_err(|p: Vec<usize>| {
        format!("expected 3 comma-separated epoch counts, got {}", p.len())
    })
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory.
    #[arg(long, required_unless_present = "manifest")]
    pub dataset: Option<PathBuf>,
    /// Replay a manifest written by an earlier run; other flags override it.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Do not print per-epoch lines.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitChoice {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitChoice,
    /// Noise standard deviation in units of the training-split feature std.
    #[arg(long, default_value_t = 0.0)]
    pub noise_level: f64,
    /// Fraction of evaluated test instances that receive noise.
    #[arg(long, default_value_t = 1.0)]
    pub noise_fraction: f64,
    /// Seed of the noise stream; defaults to the training seed.
    #[arg(long)]
    pub noise_seed: Option<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 5)]
    pub classes: usize,
    #[arg(long, default_value_t = 3)]
    pub views: usize,
    #[arg(long, default_value_t = 2000)]
    pub instances: usize,
    /// Feature dimension of every view.
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    /// Class-mean separation; one value for all views or one per view.
    #[arg(long, value_delimiter = ',', default_value = "3.0")]
    pub separation: Vec<f64>,
    /// Noise standard deviation; one value for all views or one per view.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    pub noise: Vec<f64>,
    /// Misleading views, 1-based and comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub misleading_views: Vec<usize>,
    /// Label permutation of misleading views, 0-based classes
    /// (default: swap classes 0 and 1).
    #[arg(long, value_delimiter = ',')]
    pub permutation: Option<Vec<usize>>,
    /// Fraction of instances a misleading view draws at the permuted mean.
    #[arg(long, default_value_t = 0.5)]
    pub mislead_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

impl SynthArgs {
    pub fn spec(&self) -> Result<SynthSpec> {
        let per_view = |values: &[f64], what: &str| -> Result<Vec<f64>> {
            match values.len() {
                1 => Ok(vec![values[0]; self.views]),
                n if n == self.views => Ok(values.to_vec()),
                n => Err(Error::Config(format!(
                    "{n} {what} values for {} views",
                    self.views
                ))),
            }
        };
        let mut spec = SynthSpec::new(self.classes, self.views, self.instances, self.seed);
        spec.dim = self.dim;
        spec.separation = per_view(&self.separation, "separation")?;
        spec.noise = per_view(&self.noise, "noise")?;
        spec.misleading = self
            .misleading_views
            .iter()
            .map(|&v| {
                v.checked_sub(1)
                    .ok_or_else(|| Error::Config("views are numbered from 1".into()))
            })
            .collect::<Result<_>>()?;
        if let Some(p) = &self.permutation {
            spec.permutation = p.clone();
        }
        spec.mislead_rate = self.mislead_rate;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Smoothing,
    Warmup,
    Noise,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Grid values; defaults to 0.6..1.0 (smoothing), 0,1,2,5,10 (warmup)
    /// or 0,0.5,1,2,5,10 (noise level).
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub seeds: Vec<u64>,
    /// Fraction of test instances that receive noise in a noise sweep.
    #[arg(long, default_value_t = 1.0)]
    pub noise_fraction: f64,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(args) => cmd_train(&args).map(|_| ()),
        Command::Eval(args) => cmd_eval(&args).map(|_| ()),
        Command::Demo => {
            let demo = titanic_demo()?;
            print!("{}", demo.render());
            demo.check()
        }
        Command::Synth(args) => cmd_synth(&args),
        Command::Sweep(args) => cmd_sweep(&args),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Keys of a manifest that are not config keys.
const MANIFEST_RUN_KEYS: [&str; 6] = [
    "dataset",
    "fingerprint",
    "classes",
    "views",
    "instances",
    "trustfuse_version",
];

/// Flat manifest: run keys, then every config key.
pub fn render_manifest(
    dataset: &Path,
    ds: &MultiViewDataset,
    views: usize,
    cfg: &TrainConfig,
) -> String {
    let mut run = toml::Table::new();
    run.insert("trustfuse_version".into(), env!("CARGO_PKG_VERSION").into());
    run.insert("dataset".into(), dataset.display().to_string().into());
    run.insert("fingerprint".into(), ds.fingerprint().into());
    run.insert("classes".into(), (ds.num_classes() as i64).into());
    run.insert("views".into(), (views as i64).into());
    run.insert("instances".into(), (ds.len() as i64).into());
    let mut out = toml::to_string(&run).expect("manifest serializes");
    out.push_str(&cfg.to_toml());
    out
}

/// Dataset path and config stored in a manifest.
pub fn parse_manifest(text: &str) -> Result<(PathBuf, String, TrainConfig)> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| Error::Config(format!("manifest: {e}")))?;
    let dataset = table
        .get("dataset")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::Config("manifest has no dataset".into()))?
        .into();
    let fingerprint = table
        .get("fingerprint")
        .and_then(|v| v.as_str())
        .unwrap_or_default()
        .to_string();
    for key in MANIFEST_RUN_KEYS {
        table.remove(key);
    }
    let cfg = TrainConfig::from_toml(&toml::to_string(&table).expect("table serializes"))?;
    Ok((dataset, fingerprint, cfg))
}

/// Result of `train`.
pub struct TrainRun {
    pub model: Model,
    pub reports: Vec<EpochReport>,
    pub metrics: MetricsReport,
}

pub fn cmd_train(args: &TrainArgs) -> Result<TrainRun> {
    let (manifest_dataset, expected_fingerprint, base) = match &args.manifest {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let (dataset, fp, cfg) = parse_manifest(&text)?;
            (dataset, Some(fp), cfg)
        }
        None => (PathBuf::new(), None, TrainConfig::default()),
    };
    let dataset_path = args.dataset.clone().unwrap_or(manifest_dataset);
    let cfg = args.config.resolve_over(&base)?;

    let raw = load_dataset(&dataset_path)?;
    if let Some(fp) = expected_fingerprint.filter(|fp| !fp.is_empty() && args.dataset.is_none()) {
        if fp != raw.fingerprint() {
            return Err(Error::Config(format!(
                "dataset {} does not match the manifest fingerprint",
                dataset_path.display()
            )));
        }
    }
    let ds = split(raw, cfg.train_fraction, cfg.seed)?;
    let out = &args.out.out;
    create_dir(out)?;

    let views = ds.num_views() + usize::from(cfg.use_pseudo_view);
    let mut log = EpochReport::csv_header(views);
    log.push('\n');
    let quiet = args.quiet;
    let trained = train_with(&ds, &cfg, |r| {
        log.push_str(&r.csv_row());
        log.push('\n');
        if !quiet {
            println!(
                "{} epoch {:>3}  kl {:.2}  loss {:.4}  train acc {:.4}  skipped {}",
                r.stage.name(),
                r.epoch,
                r.kl_weight,
                r.loss,
                r.train_accuracy,
                r.skipped
            );
        }
    })?;
    write_file(&out.join("epochs.csv"), &log)?;
    trained.model.save(out.join("model.ckpt"))?;
    write_file(
        &out.join("manifest.toml"),
        &render_manifest(&dataset_path, &ds, views, &cfg),
    )?;

    let evaluation = trained.model.evaluate(&ds, ds.test_indices())?;
    let metrics = write_evaluation(out, &trained.model, &evaluation)?;
    print!("{}", metrics.to_text());
    Ok(TrainRun {
        model: trained.model,
        reports: trained.reports,
        metrics,
    })
}

/// Writes metrics, conflict matrix and per-instance predictions.
fn write_evaluation(out: &Path, model: &Model, evaluation: &Evaluation) -> Result<MetricsReport> {
    let metrics = MetricsReport::compute(
        &evaluation.records,
        model.nets.num_classes,
        evaluation.flagged.len(),
    )?;
    write_file(&out.join("metrics.txt"), &metrics.to_text())?;
    write_file(
        &out.join("metrics.csv"),
        &format!("{}\n{}\n", MetricsReport::CSV_HEADER, metrics.to_csv_row()),
    )?;
    write_file(&out.join("conflict.csv"), &metrics.conflict_csv())?;
    write_file(
        &out.join("predictions.csv"),
        &predictions_csv(model, evaluation),
    )?;
    Ok(metrics)
}

pub fn predictions_csv(model: &Model, evaluation: &Evaluation) -> String {
    let mut out = "index,label,predicted,uncertainty".to_string();
    for k in 1..=model.nets.num_classes {
        write!(out, ",belief{k}").expect("writing to a String");
    }
    for v in 1..=model.nets.num_views() {
        write!(out, ",trust{v}").expect("writing to a String");
    }
    out.push('\n');
    for ((i, p), r) in evaluation
        .indices
        .iter()
        .zip(&evaluation.predictions)
        .zip(&evaluation.records)
    {
        write!(
            out,
            "{i},{},{},{:.16e}",
            r.true_label,
            p.label,
            p.fused.uncertainty()
        )
        .expect("writing to a String");
        for b in p.fused.belief() {
            write!(out, ",{b:.16e}").expect("writing to a String");
        }
        for t in &p.view_trust {
            write!(out, ",{t:.16e}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub fn cmd_eval(args: &EvalArgs) -> Result<MetricsReport> {
    let model = Model::load(&args.checkpoint)?;
    let raw = load_dataset(&args.dataset)?;
    let ds = split(raw, model.config.train_fraction, model.config.seed)?;
    let ds = inject_noise(
        &ds,
        args.noise_level,
        args.noise_fraction,
        args.noise_seed.unwrap_or(model.config.seed),
    )?;
    let indices: Vec<usize> = match args.split {
        SplitChoice::Train => ds.train_indices().to_vec(),
        SplitChoice::Test => ds.test_indices().to_vec(),
        SplitChoice::All => (0..ds.len()).collect(),
    };
    let evaluation = model.evaluate(&ds, &indices)?;
    create_dir(&args.out.out)?;
    let metrics = write_evaluation(&args.out.out, &model, &evaluation)?;
    print!("{}", metrics.to_text());
    Ok(metrics)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let ds = synth_conflict(&args.spec()?)?;
    write_dataset(&ds, &args.out.out)?;
    println!(
        "wrote {} instances, {} views, {} classes to {}",
        ds.len(),
        ds.num_views(),
        ds.num_classes(),
        args.out.out.display()
    );
    Ok(())
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Header of the sweep CSV.
pub const SWEEP_HEADER: &str =
    "param,value,seeds,top1_mean,top1_std,fleiss_kappa_mean,fleiss_kappa_std,mvagt_mean,mvagt_std,auroc_mean,auroc_std";

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let values = args.values.clone().unwrap_or_else(|| match args.param {
        SweepParam::Smoothing => vec![0.6, 0.7, 0.8, 0.9, 1.0],
        SweepParam::Warmup => vec![0.0, 1.0, 2.0, 5.0, 10.0],
        SweepParam::Noise => vec![0.0, 0.5, 1.0, 2.0, 5.0, 10.0],
    });
    if values.is_empty() || args.seeds.is_empty() {
        return Err(Error::Config(
            "sweep needs at least one value and one seed".into(),
        ));
    }
    let base = args.config.resolve()?;
    let raw = load_dataset(&args.dataset)?;
    let name = match args.param {
        SweepParam::Smoothing => "smoothing",
        SweepParam::Warmup => "warmup",
        SweepParam::Noise => "noise",
    };

    // results[value][seed]
    let mut results: Vec<Vec<MetricsReport>> = vec![Vec::new(); values.len()];
    for &seed in &args.seeds {
        let mut cfg = TrainConfig {
            seed,
            ..base.clone()
        };
        let ds = split(raw.clone(), cfg.train_fraction, seed)?;
        if args.param == SweepParam::Noise {
            let model = train_with(&ds, &cfg, |_| {})?.model;
            for (slot, &level) in results.iter_mut().zip(&values) {
                let noisy = inject_noise(&ds, level, args.noise_fraction, seed)?;
                let ev = model.evaluate(&noisy, noisy.test_indices())?;
                slot.push(MetricsReport::compute(
                    &ev.records,
                    raw.num_classes(),
                    ev.flagged.len(),
                )?);
            }
            continue;
        }
        for (slot, &value) in results.iter_mut().zip(&values) {
            match args.param {
                SweepParam::Smoothing => cfg.smoothing_eta = value,
                SweepParam::Warmup => {
                    if value < 0.0 || value.fract() != 0.0 {
                        return Err(Error::Config(format!(
                            "warm-up epochs must be whole numbers, got {value}"
                        )));
                    }
                    cfg.warmup_epochs = value as usize;
                }
                SweepParam::Noise => unreachable!(),
            }
            cfg.validate()?;
            let model = train_with(&ds, &cfg, |_| {})?.model;
            let ev = model.evaluate(&ds, ds.test_indices())?;
            slot.push(MetricsReport::compute(
                &ev.records,
                raw.num_classes(),
                ev.flagged.len(),
            )?);
        }
    }

    let mut csv = format!("{SWEEP_HEADER}\n");
    for (value, reports) in values.iter().zip(&results) {
        let stat = |f: &dyn Fn(&MetricsReport) -> Option<f64>| -> String {
            let xs: Vec<f64> = reports.iter().filter_map(f).collect();
            if xs.is_empty() {
                return ",".into();
            }
            let (m, s) = mean_std(&xs);
            format!("{m:.16e},{s:.16e}")
        };
        writeln!(
            csv,
            "{name},{value},{},{},{},{},{}",
            reports.len(),
            stat(&|r| Some(r.top1)),
            stat(&|r| r.fleiss_kappa),
            stat(&|r| Some(r.mvagt)),
            stat(&|r| r.auroc)
        )
        .expect("writing to a String");
    }
    create_dir(&args.out.out)?;
    write_file(&args.out.out.join(format!("sweep_{name}.csv")), &csv)?;
    print!("{csv}");
    Ok(())
}

/// Inputs and exact results of the Titanic worked example.
pub struct TitanicDemo {
    pub views: [&'static str; 3],
    pub functional: Vec<MultinomialOpinion>,
    pub referral: Vec<ReferralOpinion>,
    pub trust: Vec<f64>,
    pub discounted: Vec<MultinomialOpinion>,
    pub fused_plain: MultinomialOpinion,
    pub fused_discounted: MultinomialOpinion,
}

/// Values computed independently from the stated inputs with exact
/// rational arithmetic, then rounded to f64.
pub mod golden {
    pub const FUSED_PLAIN: [f64; 3] =
        [0.6801346801346799, 0.3176206509539842, 0.002244668911335578];
    pub const TRUST: [f64; 3] = [0.65, 0.95, 0.25];
    pub const DISCOUNTED: [[f64; 3]; 3] = [
        [0.5525, 0.0325, 0.415],
        [0.0475, 0.855, 0.0975],
        [0.1875, 0.05, 0.7625],
    ];
    pub const FUSED_DISCOUNTED: [f64; 3] =
        [0.2282383258671739, 0.7030082433294216, 0.06875343080340465];
    pub const TOLERANCE: f64 = 1e-12;
}

/// The two-decimal values printed alongside the worked example.
pub mod printed {
    pub const FUSED_PLAIN: [f64; 3] = [0.68, 0.31, 0.01];
    pub const TRUST: [f64; 3] = [0.65, 0.95, 0.25];
    pub const DISCOUNTED: [[f64; 3]; 3] =
        [[0.55, 0.03, 0.42], [0.04, 0.86, 0.10], [0.19, 0.05, 0.76]];
    pub const FUSED_DISCOUNTED: [f64; 3] = [0.22, 0.70, 0.08];
}

pub fn titanic_demo() -> Result<TitanicDemo> {
    let functional = vec![
        MultinomialOpinion::new(vec![0.85, 0.05], 0.10)?,
        MultinomialOpinion::new(vec![0.05, 0.90], 0.05)?,
        MultinomialOpinion::new(vec![0.75, 0.20], 0.05)?,
    ];
    let referral = vec![
        ReferralOpinion::new(0.6, 0.3, 0.1)?,
        ReferralOpinion::new(0.9, 0.0, 0.1)?,
        ReferralOpinion::new(0.2, 0.7, 0.1)?,
    ];
    let trust: Vec<f64> = referral
        .iter()
        .map(ReferralOpinion::degree_of_trust)
        .collect();
    let discounted = functional
        .iter()
        .zip(&trust)
        .map(|(f, &p)| trust_discount(f, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(TitanicDemo {
        views: ["Captain", "Dolphin", "PolarBear"],
        fused_plain: bcf_fuse_all(&functional)?,
        fused_discounted: discounted_fuse(&functional, &trust)?,
        functional,
        referral,
        trust,
        discounted,
    })
}

fn triple(op: &MultinomialOpinion) -> [f64; 3] {
    [op.belief()[0], op.belief()[1], op.uncertainty()]
}

const LABELS: [&str; 2] = ["Safe", "Unsafe"];

impl TitanicDemo {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let row = |out: &mut String, name: &str, got: [f64; 3], shown: [f64; 3]| {
            writeln!(
                out,
                "{name:<24} {:>8.4} {:>8.4} {:>8.4}   printed {:.2} {:.2} {:.2}  delta {:+.4} {:+.4} {:+.4}",
                got[0],
                got[1],
                got[2],
                shown[0],
                shown[1],
                shown[2],
                got[0] - shown[0],
                got[1] - shown[1],
                got[2] - shown[2]
            )
            .expect("writing to a String");
        };
        writeln!(
            out,
            "{:<24} {:>8} {:>8} {:>8}",
            "Functional opinions", "safe", "unsafe", "u"
        )
        .expect("writing to a String");
        for (name, f) in self.views.iter().zip(&self.functional) {
            let t = triple(f);
            writeln!(out, "{name:<24} {:>8.4} {:>8.4} {:>8.4}", t[0], t[1], t[2])
                .expect("writing to a String");
        }
        row(
            &mut out,
            "Fused (BCF)",
            triple(&self.fused_plain),
            printed::FUSED_PLAIN,
        );
        writeln!(out, "  prediction: {}", LABELS[self.fused_plain.argmax()])
            .expect("writing to a String");
        writeln!(out).expect("writing to a String");
        writeln!(
            out,
            "{:<24} {:>8} {:>8} {:>8} {:>8}",
            "Referral opinions", "trust", "distrust", "u", "DoT"
        )
        .expect("writing to a String");
        for ((name, r), (p, want)) in self
            .views
            .iter()
            .zip(&self.referral)
            .zip(self.trust.iter().zip(printed::TRUST))
        {
            writeln!(
                out,
                "{name:<24} {:>8.4} {:>8.4} {:>8.4} {:>8.4}   printed {want:.2}  delta {:+.4}",
                r.belief_trust,
                r.belief_distrust,
                r.uncertainty,
                p,
                p - want
            )
            .expect("writing to a String");
        }
        writeln!(out).expect("writing to a String");
        writeln!(out, "Discounted opinions").expect("writing to a String");
        for ((name, d), shown) in self
            .views
            .iter()
            .zip(&self.discounted)
            .zip(printed::DISCOUNTED)
        {
            row(&mut out, name, triple(d), shown);
        }
        row(
            &mut out,
            "Fused (BCF with TD)",
            triple(&self.fused_discounted),
            printed::FUSED_DISCOUNTED,
        );
        writeln!(
            out,
            "  prediction: {}",
            LABELS[self.fused_discounted.argmax()]
        )
        .expect("writing to a String");
        out
    }

    /// Compares every computed value with the golden values.
    pub fn check(&self) -> Result<()> {
        let mut failures = Vec::new();
        let mut cmp = |what: String, got: &[f64], want: &[f64]| {
            for (g, w) in got.iter().zip(want) {
                if (g - w).abs() > golden::TOLERANCE {
                    failures.push(format!("{what}: got {g}, want {w}"));
                }
            }
        };
        cmp(
            "fused".into(),
            &triple(&self.fused_plain),
            &golden::FUSED_PLAIN,
        );
        cmp("trust".into(), &self.trust, &golden::TRUST);
        for (i, d) in self.discounted.iter().enumerate() {
            cmp(
                format!("discounted {}", self.views[i]),
                &triple(d),
                &golden::DISCOUNTED[i],
            );
        }
        cmp(
            "fused with TD".into(),
            &triple(&self.fused_discounted),
            &golden::FUSED_DISCOUNTED,
        );
        if self.fused_plain.argmax() != 0 || self.fused_discounted.argmax() != 1 {
            failures.push("predicted labels differ from Safe / Unsafe".into());
        }
        if failures.is_empty() {
            Ok(())
        } else {
            Err(Error::Numeric(format!(
                "golden check failed: {}",
                failures.join("; ")
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_matches_golden() {
        let demo = titanic_demo().unwrap();
        demo.check().unwrap();
        let text = demo.render();
        assert!(text.contains("prediction: Unsafe"));
        assert!(text.contains("prediction: Safe"));
    }

    #[test]
    fn cli_parses() {
        let cli = Cli::try_parse_from([
            "trustfuse",
            "train",
            "--dataset",
            "d",
            "--no-td",
            "--stage-epochs",
            "1,2,3",
            "--out",
            "o",
        ])
        .unwrap();
        let Command::Train(args) = cli.command else {
            panic!()
        };
        let cfg = args.config.resolve().unwrap();
        assert!(!cfg.use_td);
        assert_eq!(cfg.stage_epochs, [1, 2, 3]);
        assert!(Cli::try_parse_from(["trustfuse", "train"]).is_err());
        assert!(
            Cli::try_parse_from(["trustfuse", "sweep", "--dataset", "d", "--param", "lr"]).is_err()
        );
    }

    #[test]
    fn synth_views_are_one_based() {
        let cli = Cli::try_parse_from([
            "trustfuse",
            "synth",
            "--misleading-views",
            "2",
            "--views",
            "3",
        ])
        .unwrap();
        let Command::Synth(args) = cli.command else {
            panic!()
        };
        assert_eq!(args.spec().unwrap().misleading, vec![1]);
        let cli = Cli::try_parse_from(["trustfuse", "synth", "--misleading-views", "0"]).unwrap();
        let Command::Synth(args) = cli.command else {
            panic!()
        };
        assert!(args.spec().is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let ds = synth_conflict(&SynthSpec::new(3, 2, 12, 1)).unwrap();
        let cfg = TrainConfig {
            seed: 9,
            use_td: false,
            ..TrainConfig::default()
        };
        let text = render_manifest(Path::new("data/x"), &ds, 2, &cfg);
        let (path, fp, back) = parse_manifest(&text).unwrap();
        assert_eq!(path, PathBuf::from("data/x"));
        assert_eq!(fp, ds.fingerprint());
        assert_eq!(back, cfg);
        assert!(text.contains("use_td = false"));
    }
}
