//! `propml` command-line tool.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 internal error. Errors go
//! to stderr prefixed with `error:`.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use propml_core::data::{
    load_dataset, load_overlay, save_dataset, save_overlay, synth_generate, SynthConfig,
};
use propml_core::harness::{
    emit_report, friedman_nemenyi, parse_report, render_cd_plot, run_cv, select_lambda, Alpha,
    Better, ExperimentConfig, LabelSource, CD_PLOT_FILE, RESULTS_FILE,
};
use propml_core::loss::{LossConfig, LossKind, DEFAULT_EPSILON};
use propml_core::metrics::{MetricName, MetricReport};
use propml_core::model::{
    load_model, predict_proba, save_model, train, TrainConfig, CHECKPOINT_VERSION,
};
use propml_core::{CandidateOverlay, CorruptionConfig, CorruptionMode, Error};

use manifest::Manifest;

#[derive(Parser)]
#[command(
    name = "propml",
    version,
    about = "Partial multi-label learning with the ProPML loss"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-label dataset.
    Synth(SynthArgs),
    /// Turn clean labels into candidate sets and write an overlay file.
    Corrupt(CorruptArgs),
    /// Train one model on a dataset and save a checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint against the clean labels of a dataset.
    Eval(EvalArgs),
    /// k-fold cross-validation over the λ grid, with reports.
    Cv(CvArgs),
    /// Friedman test and Nemenyi critical difference over several result files.
    Ranks(RanksArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Number of instances.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Number of classes.
    #[arg(long, default_value_t = 10)]
    classes: usize,
    /// Feature dimension.
    #[arg(long, default_value_t = 50)]
    dim: usize,
    /// Minimum labels per instance (≥ 1).
    #[arg(long, default_value_t = 1)]
    labels_min: usize,
    /// Maximum labels per instance.
    #[arg(long, default_value_t = 3)]
    labels_max: usize,
    /// Standard deviation of the Gaussian feature noise.
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Flip,
    Scorer,
}

impl From<ModeArg> for CorruptionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Flip => CorruptionMode::Flip,
            ModeArg::Scorer => CorruptionMode::Scorer,
        }
    }
}

#[derive(Args)]
struct CorruptArgs {
    /// Dataset file.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Flip probability in [0, 1], or false:true ratio ≥ 0 for `scorer`.
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gradient steps for the scorer.
    #[arg(long, default_value_t = 300)]
    scorer_epochs: usize,
    /// Step size for the scorer.
    #[arg(long, default_value_t = 0.5)]
    scorer_lr: f64,
    /// Output overlay file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Propml,
    Bce,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Propml => LossKind::ProPml,
            LossArg::Bce => LossKind::BceCandidates,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset file.
    #[arg(long)]
    data: PathBuf,
    /// Candidate overlay; clean labels are used when omitted.
    #[arg(long)]
    overlay: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "propml")]
    loss: LossArg,
    /// Weight of the off-candidate penalty (propml only).
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Probability clamp.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Hidden layer widths `h1,h2`.
    #[arg(long, value_delimiter = ',', default_value = "256,256")]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 128)]
    batch_size: usize,
    /// Adam step size.
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output checkpoint file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Dataset file; metrics use its clean labels.
    #[arg(long)]
    data: PathBuf,
    /// Also write the metric record to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CvArgs {
    /// Key/value config file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset file.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Candidate overlay file (exclusive with --corrupt).
    #[arg(long, conflicts_with = "corrupt")]
    overlay: Option<PathBuf>,
    /// Corrupt inline before splitting, seeded from --seed.
    #[arg(long, value_enum)]
    corrupt: Option<ModeArg>,
    /// Corruption level for --corrupt.
    #[arg(long, requires = "corrupt")]
    q: Option<f64>,
    /// Scorer gradient steps for --corrupt scorer [default: 300].
    #[arg(long)]
    scorer_epochs: Option<usize>,
    /// Scorer step size for --corrupt scorer [default: 0.5].
    #[arg(long)]
    scorer_lr: Option<f64>,
    /// Number of folds, ≥ 2 [default: 5].
    #[arg(long)]
    folds: Option<usize>,
    /// Comma-separated λ values in (0, 1] [default: 0.02,0.05,0.1,0.2,0.35,0.5,0.75,1].
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    /// Comma-separated methods: propml, bce [default: propml,bce].
    #[arg(long, value_delimiter = ',', value_enum)]
    methods: Option<Vec<LossArg>>,
    /// Metric used to pick λ [default: average_precision].
    #[arg(long)]
    criterion: Option<String>,
    /// Training epochs [default: 500].
    #[arg(long)]
    epochs: Option<usize>,
    /// Mini-batch size [default: 128].
    #[arg(long)]
    batch_size: Option<usize>,
    /// Adam step size [default: 0.001].
    #[arg(long)]
    lr: Option<f64>,
    /// Hidden layer widths `h1,h2` [default: 256,256].
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Probability clamp [default: 1e-7].
    #[arg(long)]
    epsilon: Option<f64>,
    /// Root seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 = all cores [default: 0].
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory for results.txt and manifest.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BetterArg {
    Higher,
    Lower,
}

#[derive(Args)]
struct RanksArgs {
    /// Result files from `cv`, one per dataset.
    #[arg(long, num_args = 1.., required = true)]
    results: Vec<PathBuf>,
    /// Summary metric to rank on.
    #[arg(long, default_value = "average_precision")]
    metric: String,
    /// Direction of the metric [default: the metric's own direction].
    #[arg(long, value_enum)]
    better: Option<BetterArg>,
    /// Significance level: 0.05 or 0.1.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Output directory for cd_plot.txt and manifest.
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(msg) => CliError::Usage(msg),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(Error::Parse { .. } | Error::Data(_) | Error::Io { .. }) => 2,
            CliError::Core(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Corrupt(a) => cmd_corrupt(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Ranks(a) => cmd_ranks(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

fn cmd_synth(a: SynthArgs) -> CliResult {
    let cfg = SynthConfig {
        num_instances: a.n,
        num_classes: a.classes,
        dim: a.dim,
        labels_min: a.labels_min,
        labels_max: a.labels_max,
        noise_std: a.noise,
        seed: a.seed,
    };
    let dataset = synth_generate(&cfg)?;
    save_dataset(&dataset, &a.out)?;
    let mut m = Manifest::new("synth", a.seed);
    m.config("n", a.n)
        .config("classes", a.classes)
        .config("dim", a.dim)
        .config("labels_min", a.labels_min)
        .config("labels_max", a.labels_max)
        .config("noise", a.noise)
        .format("dataset", manifest::DATASET_FORMAT);
    m.write(&sidecar(&a.out))?;
    println!("wrote {} instances to {}", dataset.len(), a.out.display());
    Ok(())
}

fn cmd_corrupt(a: CorruptArgs) -> CliResult {
    let (dataset, report) = load_dataset(&a.data)?;
    let cfg = CorruptionConfig {
        mode: a.mode.into(),
        q: a.q,
        seed: a.seed,
        scorer_epochs: a.scorer_epochs,
        scorer_lr: a.scorer_lr,
    };
    cfg.validate()?;
    let overlay = cfg.apply(&dataset)?;
    save_overlay(&overlay, &a.out)?;
    let mut m = Manifest::new("corrupt", a.seed);
    m.config("data", a.data.display())
        .config("mode", cfg.mode.name())
        .config("q", a.q)
        .config("scorer_epochs", a.scorer_epochs)
        .config("scorer_lr", a.scorer_lr)
        .format("dataset", manifest::DATASET_FORMAT)
        .format("overlay", manifest::OVERLAY_FORMAT)
        .input(&a.data)?;
    m.write(&sidecar(&a.out))?;
    if report.dropped > 0 {
        eprintln!("note: dropped {} unlabeled instances", report.dropped);
    }
    println!(
        "instances={} classes={} mean_true={:.4} mean_candidates={:.4}",
        dataset.len(),
        dataset.num_classes(),
        dataset.mean_label_count(),
        overlay.mean_size()
    );
    Ok(())
}

fn load_labels(
    dataset: &propml_core::Dataset,
    overlay: Option<&Path>,
) -> CliResult<CandidateOverlay> {
    Ok(match overlay {
        Some(p) => load_overlay(p, dataset)?,
        None => CandidateOverlay::clean(dataset),
    })
}

fn two_widths(v: &[usize]) -> CliResult<[usize; 2]> {
    v.try_into().map_err(|_| {
        CliError::Usage(format!(
            "--hidden needs exactly two widths, got {}",
            v.len()
        ))
    })
}

fn cmd_train(a: TrainArgs) -> CliResult {
    let (dataset, _) = load_dataset(&a.data)?;
    let overlay = load_labels(&dataset, a.overlay.as_deref())?;
    let kind: LossKind = a.loss.into();
    let mut config = TrainConfig {
        hidden: two_widths(&a.hidden)?,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
        loss: LossConfig {
            kind,
            lambda: a.lambda,
            epsilon: a.epsilon,
        },
        ..TrainConfig::default()
    };
    config.adam.lr = a.lr;
    let all: Vec<usize> = (0..dataset.len()).collect();
    let out = train(&dataset, &overlay, &all, &config)?;
    save_model(&out.model, &a.out)?;

    let mut m = Manifest::new("train", a.seed);
    m.config("data", a.data.display());
    if let Some(p) = &a.overlay {
        m.config("overlay", p.display());
    }
    m.config("loss", kind.name())
        .config("lambda", a.lambda)
        .config("epsilon", a.epsilon)
        .config("hidden", format!("{},{}", a.hidden[0], a.hidden[1]))
        .config("epochs", a.epochs)
        .config("batch_size", a.batch_size)
        .config("lr", a.lr)
        .format("checkpoint", &format!("PROPMLCK v{CHECKPOINT_VERSION}"))
        .input(&a.data)?;
    if let Some(p) = &a.overlay {
        m.input(p)?;
    }
    m.write(&sidecar(&a.out))?;
    if let Some(last) = out.loss_trace.last() {
        println!("final_loss={last:.6}");
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> CliResult {
    let model = load_model(&a.model)?;
    let (dataset, _) = load_dataset(&a.data)?;
    let probs = predict_proba(&model, dataset.features())?;
    let report = MetricReport::evaluate(&probs, dataset.true_labels())?;
    let record = report.to_record();
    print!("{record}");
    if let Some(out) = &a.out {
        std::fs::write(out, &record).map_err(|e| {
            CliError::Core(Error::Io {
                path: out.clone(),
                source: e,
            })
        })?;
        let mut m = Manifest::new("eval", 0);
        m.config("model", a.model.display())
            .config("data", a.data.display())
            .input(&a.model)?
            .input(&a.data)?;
        m.write(&sidecar(out))?;
    }
    Ok(())
}

fn resolve_cv_config(a: &CvArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::Core(Error::Io {
                    path: p.clone(),
                    source: e,
                })
            })?;
            ExperimentConfig::from_text(&text, p)?
        }
        None => {
            let data = a
                .data
                .clone()
                .ok_or_else(|| CliError::Usage("--data or --config is required".into()))?;
            ExperimentConfig::new(data)
        }
    };
    if let Some(d) = &a.data {
        cfg.data = d.clone();
    }
    if let Some(p) = &a.overlay {
        cfg.labels = LabelSource::Overlay(p.clone());
    }
    if let Some(mode) = a.corrupt {
        let (old_epochs, old_lr) = match cfg.labels {
            LabelSource::Corrupt {
                scorer_epochs,
                scorer_lr,
                ..
            } => (scorer_epochs, scorer_lr),
            _ => (300, 0.5),
        };
        let q =
            a.q.ok_or_else(|| CliError::Usage("--corrupt needs --q".into()))?;
        cfg.labels = LabelSource::Corrupt {
            mode: mode.into(),
            q,
            scorer_epochs: a.scorer_epochs.unwrap_or(old_epochs),
            scorer_lr: a.scorer_lr.unwrap_or(old_lr),
        };
    } else if a.scorer_epochs.is_some() || a.scorer_lr.is_some() {
        return Err(CliError::Usage(
            "--scorer-epochs/--scorer-lr need --corrupt".into(),
        ));
    }
    if let Some(v) = a.folds {
        cfg.folds = v;
    }
    if let Some(v) = &a.lambda_grid {
        cfg.lambda_grid = v.clone();
    }
    if let Some(v) = &a.methods {
        cfg.methods = v.iter().map(|&m| m.into()).collect();
    }
    if let Some(v) = &a.criterion {
        cfg.criterion = v
            .parse::<MetricName>()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if let Some(v) = a.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = a.batch_size {
        cfg.train.batch_size = v;
    }
    if let Some(v) = a.lr {
        cfg.train.adam.lr = v;
    }
    if let Some(v) = &a.hidden {
        cfg.train.hidden = two_widths(v)?;
    }
    if let Some(v) = a.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.jobs {
        cfg.jobs = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_cv(a: CvArgs) -> CliResult {
    let cfg = resolve_cv_config(&a)?;
    let table = run_cv(&cfg)?;
    emit_report(&table, None, &a.out_dir)?;

    let mut m = Manifest::new("cv", cfg.seed);
    m.config_text(&cfg.to_text())
        .config("config_hash", &table.config_hash)
        .format("dataset", manifest::DATASET_FORMAT)
        .format("results", manifest::RESULTS_FORMAT)
        .input(&cfg.data)?;
    if let LabelSource::Overlay(p) = &cfg.labels {
        m.format("overlay", manifest::OVERLAY_FORMAT).input(p)?;
    }
    if let Some(p) = &a.config {
        m.input(p)?;
    }
    m.write(&a.out_dir.join("manifest"))?;

    if cfg.methods.contains(&LossKind::ProPml) {
        let lambda = select_lambda(&table, cfg.criterion.as_str())?;
        println!("selected lambda={lambda} criterion={}", cfg.criterion);
    }
    for s in table.summaries()? {
        let lambda = s.lambda.map_or_else(|| "-".to_string(), |l| l.to_string());
        println!(
            "{} lambda={} {}={:.6}",
            s.method.name(),
            lambda,
            cfg.criterion,
            s.mean(cfg.criterion)
        );
    }
    println!("wrote {}", a.out_dir.join(RESULTS_FILE).display());
    Ok(())
}

fn cmd_ranks(a: RanksArgs) -> CliResult {
    let metric: MetricName = a
        .metric
        .parse()
        .map_err(|e: Error| CliError::Usage(e.to_string()))?;
    let alpha = Alpha::from_value(a.alpha)
        .ok_or_else(|| CliError::Usage(format!("alpha must be 0.05 or 0.1, got {}", a.alpha)))?;
    let better = match a.better {
        Some(BetterArg::Higher) => Better::Higher,
        Some(BetterArg::Lower) => Better::Lower,
        None if metric.higher_is_better() => Better::Higher,
        None => Better::Lower,
    };

    let mut methods: Option<Vec<String>> = None;
    let mut scores = Vec::with_capacity(a.results.len());
    let mut first = PathBuf::new();
    for path in &a.results {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Core(Error::Io {
                path: path.clone(),
                source: e,
            })
        })?;
        let parsed = parse_report(&text).map_err(|e| match e {
            Error::Parse { line, msg, .. } => Error::Parse {
                path: path.clone(),
                line,
                msg,
            },
            other => other,
        })?;
        let names = parsed.summary_methods();
        if names.is_empty() {
            return Err(Error::Data(format!("{}: no summary lines", path.display())).into());
        }
        match &methods {
            None => {
                methods = Some(names.clone());
                first = path.clone();
            }
            Some(expected) => {
                let only_first: Vec<_> = expected
                    .iter()
                    .filter(|m| !names.contains(m))
                    .cloned()
                    .collect();
                let only_here: Vec<_> = names
                    .iter()
                    .filter(|m| !expected.contains(m))
                    .cloned()
                    .collect();
                if !only_first.is_empty() || !only_here.is_empty() {
                    return Err(Error::Data(format!(
                        "method sets differ: only in {}: [{}]; only in {}: [{}]",
                        first.display(),
                        only_first.join(", "),
                        path.display(),
                        only_here.join(", ")
                    ))
                    .into());
                }
            }
        }
        let row = methods
            .as_ref()
            .expect("set above")
            .iter()
            .map(|m| {
                parsed.summary_mean(m, metric).ok_or_else(|| {
                    Error::Data(format!("{}: no {metric} summary for {m}", path.display()))
                })
            })
            .collect::<Result<Vec<f64>, Error>>()?;
        scores.push(row);
    }

    let mut stats = friedman_nemenyi(&scores, better, alpha)?;
    stats.methods = methods.expect("at least one file");
    std::fs::create_dir_all(&a.out).map_err(|e| {
        CliError::Core(Error::Io {
            path: a.out.clone(),
            source: e,
        })
    })?;
    let plot = a.out.join(CD_PLOT_FILE);
    std::fs::write(&plot, render_cd_plot(&stats)).map_err(|e| {
        CliError::Core(Error::Io {
            path: plot.clone(),
            source: e,
        })
    })?;

    let mut m = Manifest::new("ranks", 0);
    m.config("metric", metric)
        .config(
            "better",
            if better == Better::Higher {
                "higher"
            } else {
                "lower"
            },
        )
        .config("alpha", a.alpha)
        .format("cd_plot", manifest::CD_PLOT_FORMAT);
    for p in &a.results {
        m.input(p)?;
    }
    m.write(&a.out.join("manifest"))?;

    println!(
        "k={} n={} chi2={:.6} cd={:.6}",
        stats.k_methods, stats.n_datasets, stats.friedman_chi2, stats.nemenyi_cd
    );
    for (name, r) in stats.methods.iter().zip(&stats.mean_ranks) {
        println!("{name} mean_rank={r:.4}");
    }
    Ok(())
}
