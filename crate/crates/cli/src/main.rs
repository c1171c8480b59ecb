use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use wsvm::bench::{run_benchmark, BenchConfig};
use wsvm::io::{load_model, parse_csv_file, parse_sparse_file, save_model};
use wsvm::kernel::default_gamma;
use wsvm::validation::{cross_validate, grid_tune, kfold_split, CvReport, MetricSet, TuneGrid};
use wsvm::{predict, train, Dataset, KernelSpec, SvmParams, TaskKind, TrainConfig};

#[derive(Parser)]
#[command(name = "wsvm", version, about = "Kernel SVM training and prediction")]
struct Cli {
    /// Worker threads; 1 keeps every run single-threaded.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write it to disk.
    Train {
        #[command(flatten)]
        common: TrainArgs,
        #[arg(long)]
        model_out: PathBuf,
    },
    /// Predict with a saved model, one value per line.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: DataArgs,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// k-fold cross-validation.
    Cv {
        #[command(flatten)]
        common: TrainArgs,
        #[command(flatten)]
        folds: FoldArgs,
    },
    /// Grid search over C, gamma and epsilon by cross-validation.
    Tune {
        #[command(flatten)]
        common: TrainArgs,
        #[command(flatten)]
        folds: FoldArgs,
        #[arg(long = "grid-C", value_name = "C")]
        grid_c: Vec<f64>,
        #[arg(long = "grid-gamma", value_name = "GAMMA")]
        grid_gamma: Vec<f64>,
        #[arg(long = "grid-epsilon", value_name = "EPS")]
        grid_epsilon: Vec<f64>,
    },
    /// Time the solver against the dense projected-gradient oracle on synthetic data.
    Bench(BenchArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Sparse `label index:value` text, or CSV when the name ends in `.csv`.
    #[arg(long)]
    data: PathBuf,
    /// Zero-based label column for CSV input.
    #[arg(long, default_value_t = 0)]
    label_col: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    Svc,
    Svr,
}

impl From<Task> for TaskKind {
    fn from(t: Task) -> Self {
        match t {
            Task::Svc => TaskKind::Classification,
            Task::Svr => TaskKind::Regression,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kernel {
    Linear,
    Poly,
    Rbf,
    Sigmoid,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: DataArgs,
    #[arg(long, value_enum, default_value = "svc")]
    task: Task,
    #[arg(long, value_enum, default_value = "rbf")]
    kernel: Kernel,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    /// Defaults to 1/features.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 3)]
    degree: u32,
    #[arg(long, default_value_t = 0.0)]
    coef0: f64,
    /// Tube half-width for regression.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value_t = 16)]
    working_set: usize,
    /// Standardize features before training.
    #[arg(long)]
    scale: bool,
}

#[derive(Args)]
struct FoldArgs {
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "svc")]
    task: Task,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 10)]
    features: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Distance between the two class centers (classification).
    #[arg(long, default_value_t = 4.0)]
    margin: f64,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Run the oracle only up to this many samples.
    #[arg(long, default_value_t = 2000)]
    oracle_max: usize,
    #[arg(long, default_value_t = wsvm::oracle::DEFAULT_PG_ITERATIONS)]
    oracle_iters: usize,
    /// Also write the results as TSV.
    #[arg(long)]
    tsv: Option<PathBuf>,
    /// Validate and print the configuration without generating data.
    #[arg(long)]
    dry_run: bool,
}

fn load_data(args: &DataArgs, n_cols: Option<usize>) -> Result<(Dataset, Vec<f64>)> {
    let is_csv = args.data.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let loaded = if is_csv {
        let (d, y) = parse_csv_file(&args.data, args.label_col)?;
        match n_cols {
            Some(n) if n != d.n_cols() => bail!("{}: {} columns, model expects {n}", args.data.display(), d.n_cols()),
            _ => (d, y),
        }
    } else {
        parse_sparse_file(&args.data, n_cols)?
    };
    Ok(loaded)
}

fn params(args: &TrainArgs, n_cols: usize, parallel: bool) -> Result<SvmParams> {
    let gamma = args.gamma.unwrap_or_else(|| default_gamma(n_cols));
    let kernel = match args.kernel {
        Kernel::Linear => KernelSpec::linear(),
        Kernel::Rbf => KernelSpec::rbf(gamma),
        Kernel::Poly => KernelSpec::polynomial(gamma, args.coef0, args.degree),
        Kernel::Sigmoid => KernelSpec::sigmoid(gamma, args.coef0),
    };
    let p = SvmParams {
        task: args.task.into(),
        kernel,
        config: TrainConfig {
            c: args.c,
            epsilon_tube: args.epsilon,
            termination_tol: args.tol,
            max_iterations: args.max_iter,
            working_set_size: args.working_set,
            parallel,
            ..Default::default()
        },
        scale: args.scale,
    };
    p.config.validate()?;
    p.kernel.validate()?;
    Ok(p)
}

fn describe(m: &MetricSet) -> String {
    match *m {
        MetricSet::Classification { accuracy } => format!("accuracy={accuracy:.6}"),
        MetricSet::Regression { mse, pearson } => format!("mse={mse:.6e} pearson={pearson:.6}"),
    }
}

fn print_cv(report: &CvReport) {
    for f in &report.folds {
        match &f.result {
            Ok(m) => println!("fold {}\tn={}\t{}", f.fold, f.n_test, describe(m)),
            Err(why) => println!("fold {}\tn={}\tskipped: {why}", f.fold, f.n_test),
        }
    }
    match &report.mean {
        Some(m) => println!("mean\t{}", describe(m)),
        None => println!("mean\tnone (every fold skipped)"),
    }
}

fn write_lines(path: Option<&Path>, values: &[f64]) -> Result<()> {
    let mut text = String::with_capacity(values.len() * 8);
    for v in values {
        text.push_str(&format!("{v}\n"));
    }
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn plan_for(task: TaskKind, targets: &[f64], folds: &FoldArgs) -> Result<wsvm::validation::FoldPlan> {
    let strat = (task == TaskKind::Classification).then_some(targets);
    Ok(kfold_split(targets.len(), folds.folds, folds.seed, strat)?)
}

fn run(cli: Cli) -> Result<()> {
    let parallel = cli.threads > 1;
    if cli.threads == 0 {
        bail!("--threads must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .context("starting thread pool")?;

    match cli.command {
        Command::Train { common, model_out } => {
            let (data, targets) = load_data(&common.input, None)?;
            let p = params(&common, data.n_cols(), parallel)?;
            let model = train(&data, &targets, &p)?;
            save_model(&model, &model_out)?;
            let capped = model.training_meta.iter().filter(|m| m.iteration_cap_reached).count();
            eprintln!(
                "trained {} on {} rows: {} support vectors, {} machine(s)",
                model.task.name(),
                data.n_rows(),
                model.n_support_vectors(),
                model.decision_functions.len()
            );
            if capped > 0 {
                eprintln!("warning: {capped} machine(s) stopped at the iteration cap");
            }
        }
        Command::Predict { model, input, out } => {
            let model = load_model(&model)?;
            let (data, _) = load_data(&input, Some(model.n_features))?;
            let pred = predict(&model, &data)?;
            write_lines(out.as_deref(), &pred)?;
        }
        Command::Cv { common, folds } => {
            let (data, targets) = load_data(&common.input, None)?;
            let p = params(&common, data.n_cols(), parallel)?;
            let plan = plan_for(p.task, &targets, &folds)?;
            print_cv(&cross_validate(&data, &targets, &p, &plan)?);
        }
        Command::Tune {
            common,
            folds,
            grid_c,
            grid_gamma,
            grid_epsilon,
        } => {
            let (data, targets) = load_data(&common.input, None)?;
            let p = params(&common, data.n_cols(), parallel)?;
            let plan = plan_for(p.task, &targets, &folds)?;
            let grid = TuneGrid {
                c: grid_c,
                gamma: grid_gamma,
                epsilon: grid_epsilon,
                ..Default::default()
            };
            let res = grid_tune(&data, &targets, &p, &grid, &plan)?;
            println!("C\tgamma\tepsilon\tscore\tfailed_folds");
            for row in &res.rows {
                let score = row.cv.mean.as_ref().map_or(f64::NAN, |m| m.score());
                println!(
                    "{}\t{}\t{}\t{score}\t{}",
                    row.point.c,
                    row.point.gamma,
                    row.point.epsilon,
                    row.cv.failed_folds()
                );
            }
            let best = res.best_row();
            println!("best\tC={} gamma={} epsilon={}", best.point.c, best.point.gamma, best.point.epsilon);
        }
        Command::Bench(b) => {
            if b.samples == 0 || b.features == 0 {
                bail!("--samples and --features must be positive");
            }
            let cfg = BenchConfig {
                task: b.task.into(),
                samples: b.samples,
                features: b.features,
                seed: b.seed,
                kernel: None,
                c: b.c,
                epsilon: b.epsilon,
                tol: b.tol,
                margin: b.margin,
                max_iterations: b.max_iter,
                oracle_max: b.oracle_max,
                oracle_iterations: b.oracle_iters,
                parallel,
            };
            if b.dry_run {
                print!("{}", cfg.header());
                return Ok(());
            }
            let report = run_benchmark(&cfg)?;
            print!("{}", report.table());
            if let Some(path) = b.tsv {
                fs::write(&path, report.tsv()).with_context(|| format!("writing {}", path.display()))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
