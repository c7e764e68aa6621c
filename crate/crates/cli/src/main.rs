use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hyperset_core::domains::{generate_instance, load_instance};
use hyperset_core::experiment::matrix::{load_results_csv, WORKERS_ENV};
use hyperset_core::experiment::report::REPORT_FILE;
use hyperset_core::experiment::{
    aggregate, check_experiment, emit_report, run_matrix, Aggregates, Experiment, ExperimentConfig,
    MatrixOptions, ReferenceResults,
};
use hyperset_core::{DomainKind, Error, InstanceFormat, SelectorPlugins};

#[derive(Parser)]
#[command(
    name = "hyperset",
    version,
    about = "Run and score hyper-heuristic experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (method, instance, seed) cell of a config and write a report.
    Run(RunArgs),
    /// Score an existing results.csv.
    Score(ScoreArgs),
    /// Generate a random instance.
    Gen(GenArgs),
    /// Check a config, or a single instance file.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Worker threads (overrides the config and the environment).
    #[arg(long, short = 'j')]
    workers: Option<usize>,
    /// Ignore completed cells from a previous interrupted run.
    #[arg(long)]
    fresh: bool,
    /// Output directory (default: the config's output.dir).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// CSV of external medians (instance,method,median) to compete against.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    results: PathBuf,
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Output directory (default: next to the results file).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, short)]
    domain: DomainKind,
    #[arg(long, short)]
    size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Instance name written into the file header.
    #[arg(long)]
    name: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Experiment config (TOML).
    #[arg(required_unless_present = "instance")]
    config: Option<PathBuf>,
    /// Check one instance file instead.
    #[arg(long, conflicts_with = "config")]
    instance: Option<PathBuf>,
    /// Instance format when the extension is not recognized.
    #[arg(long, requires = "instance")]
    format: Option<InstanceFormat>,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: Error,
}

impl Failure {
    fn invalid(error: impl Into<Error>) -> Self {
        Self {
            code: 1,
            error: error.into(),
        }
    }

    fn runtime(error: impl Into<Error>) -> Self {
        Self {
            code: 2,
            error: error.into(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Score(args) => score(args),
        Command::Gen(args) => gen(args),
        Command::Validate(args) => validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load_experiment(path: &Path) -> Result<Experiment, Failure> {
    let config = ExperimentConfig::load(path).map_err(Failure::invalid)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let exp = config.resolve(base).map_err(Failure::invalid)?;
    check_experiment(&exp, &SelectorPlugins::default()).map_err(Failure::invalid)?;
    Ok(exp)
}

fn load_reference(path: Option<&Path>) -> Result<Option<ReferenceResults>, Failure> {
    path.map(ReferenceResults::load)
        .transpose()
        .map_err(Failure::invalid)
}

fn print_ranking(agg: &Aggregates, dir: &Path) {
    println!(
        "{:<4} {:<22} {:>8} {:>10}",
        "rank", "method", "F1", "norm.med"
    );
    for (rank, m) in agg.f1.ranking().into_iter().enumerate() {
        let norm = agg.mean_normalized[m].map_or("n/a".to_string(), |v| format!("{v:.4}"));
        println!(
            "{:<4} {:<22} {:>8.1} {:>10}",
            rank + 1,
            agg.methods[m],
            agg.f1.totals[m],
            norm
        );
    }
    if !agg.failed_cells.is_empty() {
        println!(
            "warning: {} cell(s) had no successful run",
            agg.failed_cells.len()
        );
    }
    println!("report: {}", dir.join(REPORT_FILE).display());
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut exp = load_experiment(&args.config)?;
    if let Some(dir) = args.output {
        exp.output_dir = dir;
    }
    let reference = load_reference(args.reference.as_deref())?;
    if let Some(0) = args.workers {
        return Err(Failure::invalid(hyperset_core::ConfigError::invalid(
            "--workers must be positive",
        )));
    }
    fs::create_dir_all(&exp.output_dir).map_err(|e| {
        Failure::runtime(Error::io(
            format!("creating {}", exp.output_dir.display()),
            e,
        ))
    })?;
    let options = MatrixOptions {
        workers: args.workers,
        fresh: args.fresh,
        ..MatrixOptions::journaled(&exp)
    };
    let records = run_matrix(&exp, &SelectorPlugins::default(), &options).map_err(|e| match e {
        Error::Config(_) => Failure::invalid(e),
        e => Failure::runtime(e),
    })?;
    let agg = aggregate(&records, reference.as_ref()).map_err(Failure::runtime)?;
    emit_report(&agg, &records, &exp.output_dir).map_err(Failure::runtime)?;
    print_ranking(&agg, &exp.output_dir);
    Ok(())
}

fn score(args: ScoreArgs) -> Result<(), Failure> {
    let records = load_results_csv(&args.results).map_err(Failure::invalid)?;
    let reference = load_reference(args.reference.as_deref())?;
    let agg = aggregate(&records, reference.as_ref()).map_err(Failure::invalid)?;
    let dir = args.output.unwrap_or_else(|| {
        args.results
            .parent()
            .unwrap_or(Path::new("."))
            .to_path_buf()
    });
    emit_report(&agg, &records, &dir).map_err(Failure::runtime)?;
    print_ranking(&agg, &dir);
    Ok(())
}

fn gen(args: GenArgs) -> Result<(), Failure> {
    let instance =
        generate_instance(args.domain, args.size, args.seed).map_err(Failure::invalid)?;
    let name = args
        .name
        .unwrap_or_else(|| format!("{}-{}-s{}", args.domain.short_name(), args.size, args.seed));
    let text = instance.to_text(&name);
    match args.output {
        Some(path) => fs::write(&path, text)
            .map_err(|e| Failure::runtime(Error::io(format!("writing {}", path.display()), e))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::runtime(Error::io("writing stdout", e))),
    }
}

fn validate(args: ValidateArgs) -> Result<(), Failure> {
    if let Some(path) = args.instance {
        let format = match args.format.or_else(|| InstanceFormat::from_path(&path)) {
            Some(f) => f,
            None => {
                return Err(Failure::invalid(hyperset_core::ConfigError::invalid(
                    format!(
                        "cannot infer the format of {}; pass --format",
                        path.display()
                    ),
                )))
            }
        };
        let instance = load_instance(&path, format).map_err(Failure::invalid)?;
        println!(
            "{}: {} instance of size {}",
            path.display(),
            instance.kind(),
            instance.size()
        );
        return Ok(());
    }
    let path = args.config.expect("clap requires a config or an instance");
    let exp = load_experiment(&path)?;
    println!(
        "{}: {} methods x {} instances x {} seeds = {} runs, budget {:?}",
        path.display(),
        exp.methods.len(),
        exp.instances.len(),
        exp.seeds.len(),
        exp.methods.len() * exp.instances.len() * exp.seeds.len(),
        exp.budget
    );
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        println!("{WORKERS_ENV}={v}");
    }
    Ok(())
}
