//! Argument parsing and the `fit`, `score` and `simulate` subcommands.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ggmsel_core::score::score_model;
use ggmsel_core::simulate::{Family, TruthSpec};

use crate::config::{ConfigEcho, FileConfig, ModelSettings, SearchKind, TruncationConfig};
use crate::error::{CliError, EXIT_OK};
use crate::ingest::{ingest, IngestError, IngestOptions, Ingested};
use crate::parallel;
use crate::report::{
    read_edge_list, to_json, write_edge_list, write_study_csv, FitReport, ScoreReport, StudyRow, DEFAULT_TOP_MODELS,
};

#[derive(Debug, Parser)]
#[command(name = "ggmsel", version, about = "Bayesian structure learning for Gaussian graphical models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search graph space and report edge inclusion probabilities and the median probability model.
    Fit(FitArgs),
    /// Score a single graph given as an edge list.
    Score(ScoreArgs),
    /// Run a simulation study and write one CSV row of recovery metrics.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// TOML file with default settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Glasso penalty, equal to lambda / n.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Prior edge probability, below 1/2.
    #[arg(long)]
    pub q: Option<f64>,
    /// Hard cap on the number of edges.
    #[arg(long)]
    pub rbar: Option<usize>,
    #[arg(long, value_enum)]
    pub search: Option<SearchKind>,
    /// Proposals per restart.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_edges: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Suppress progress messages.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct InputArgs {
    /// CSV file, one observation per row.
    pub input: PathBuf,
    /// The first row holds column names.
    #[arg(long)]
    pub header: bool,
    /// Replace prices by log returns of consecutive rows.
    #[arg(long)]
    pub log_returns: bool,
    /// Center and scale every column to unit variance.
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// JSON summary path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Edge list of the median probability model; defaults to the `--out` path with extension `edges`.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Models listed in the summary.
    #[arg(long, default_value_t = DEFAULT_TOP_MODELS)]
    pub top_models: usize,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Edge list of the graph to score.
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// One of ar1, ar2, star, circle.
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// CSV path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Score(a) => cmd_score(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    }
}

fn exit_code(r: Result<(), CliError>) -> i32 {
    match r {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("ggmsel: {e}");
            e.exit_code()
        }
    }
}

pub fn cmd_fit(args: &FitArgs) -> i32 {
    exit_code(fit(args))
}

pub fn cmd_score(args: &ScoreArgs) -> i32 {
    exit_code(score(args))
}

pub fn cmd_simulate(args: &SimulateArgs) -> i32 {
    exit_code(simulate(args))
}

fn settings(model: &ModelArgs) -> Result<(ModelSettings, FileConfig), CliError> {
    let file = match &model.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let mut s = ModelSettings::default();
    s.apply_file(&file);
    if let Some(v) = model.rho {
        s.rho = v;
    }
    if let Some(v) = model.q {
        s.q = v;
    }
    if let Some(r) = model.rbar {
        s.truncation = TruncationConfig::HardCap { r_bar: Some(r) };
    }
    s.search = model.search.or(s.search);
    s.steps = model.steps.or(s.steps);
    s.restarts = model.restarts.or(s.restarts);
    if let Some(v) = model.temperature {
        s.temperature = v;
    }
    s.max_edges = model.max_edges.or(s.max_edges);
    if let Some(v) = model.seed {
        s.seed = v;
    }
    s.validate()?;
    Ok((s, file))
}

fn load_data(input: &InputArgs, file: &FileConfig) -> Result<Ingested, CliError> {
    let opts = IngestOptions {
        header: input.header || file.header.unwrap_or(false),
        log_returns: input.log_returns || file.log_returns.unwrap_or(false),
        standardize: input.standardize || file.standardize.unwrap_or(false),
    };
    let data = ingest(&input.input, opts)?;
    if data.data.rows() < 2 {
        return Err(IngestError::TooFewRows { rows: data.data.rows() }.into());
    }
    Ok(data)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    let written = match out {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(text.as_bytes()).and_then(|_| w.flush())
        }
        None => {
            let mut lock = std::io::stdout().lock();
            lock.write_all(text.as_bytes()).and_then(|_| lock.flush())
        }
    };
    written.map_err(|e| CliError::Config(format!("cannot write output: {e}")))
}

fn fit(args: &FitArgs) -> Result<(), CliError> {
    let (settings, file) = settings(&args.model)?;
    let data = load_data(&args.input, &file)?;
    let (n, p) = (data.data.rows(), data.data.cols());
    let resolved = settings.resolve(n, p)?;
    let pool = parallel::pool(args.model.threads)?;
    let quiet = args.model.quiet;
    let summary = parallel::search(&pool, &data.cov, n, &resolved.prior, &resolved.search, |pr| {
        if !quiet {
            eprintln!(
                "restart {} step {}/{}: log score {:.3}, {} models",
                pr.restart, pr.step, pr.steps, pr.current_total, pr.distinct_models
            );
        }
    })?;
    let report = FitReport::new(ConfigEcho::new(&settings, &resolved), n, p, &summary, args.top_models);
    emit(args.out.as_deref(), &to_json(&report))?;

    let edges = args
        .edges
        .clone()
        .or_else(|| args.out.as_ref().map(|o| o.with_extension("edges")));
    if let Some(path) = edges {
        let mut w = create(&path)?;
        write_edge_list(&mut w, &summary.median_model)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn score(args: &ScoreArgs) -> Result<(), CliError> {
    let (settings, file) = settings(&args.model)?;
    let data = load_data(&args.input, &file)?;
    let (n, p) = (data.data.rows(), data.data.cols());
    let resolved = settings.resolve(n, p)?;
    let f = File::open(&args.graph)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", args.graph.display())))?;
    let graph = read_edge_list(BufReader::new(f), p)?;
    let s = score_model(&graph, &data.cov, n, &resolved.prior, &resolved.search.solver)?;
    let report = ScoreReport::new(ConfigEcho::new(&settings, &resolved), n, p, &graph, &s);
    emit(args.out.as_deref(), &to_json(&report))
}

fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let (settings, _) = settings(&args.model)?;
    let family = Family::parse(&args.family)
        .ok_or_else(|| CliError::Config(format!("unknown family {:?}; use ar1, ar2, star or circle", args.family)))?;
    if args.reps == 0 {
        return Err(CliError::Config("reps must be at least 1".into()));
    }
    if args.n < 2 {
        return Err(CliError::Config("n must be at least 2".into()));
    }
    let spec = TruthSpec::new(family, args.p)?;
    let resolved = settings.resolve(args.n, args.p)?;
    let pool = parallel::pool(args.model.threads)?;
    if !args.model.quiet {
        eprintln!("simulating {} replications of {} with p = {}, n = {}", args.reps, family.name(), args.p, args.n);
    }
    let report = parallel::study(&pool, spec, args.n, args.reps, &resolved.prior, &resolved.search, settings.seed)?;
    let row = StudyRow::new(&report, &ConfigEcho::new(&settings, &resolved));
    let mut buf = Vec::new();
    write_study_csv(&mut buf, &[row]).map_err(|e| CliError::Config(format!("cannot format CSV: {e}")))?;
    emit(args.out.as_deref(), std::str::from_utf8(&buf).expect("csv is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "q = 0.2\nrho = 0.3\nseed = 5\n").unwrap();
        let model = ModelArgs {
            config: Some(path),
            rho: Some(0.7),
            rbar: Some(4),
            ..Default::default()
        };
        let (s, _) = settings(&model).unwrap();
        assert_eq!((s.q, s.rho, s.seed), (0.2, 0.7, 5));
        assert_eq!(s.truncation, TruncationConfig::HardCap { r_bar: Some(4) });
    }

    #[test]
    fn cli_parses_subcommands() {
        let cli = Cli::try_parse_from([
            "ggmsel", "fit", "data.csv", "--rho", "0.4", "--search", "exact", "--standardize", "--out", "o.json",
        ])
        .unwrap();
        let Command::Fit(a) = cli.command else { panic!() };
        assert_eq!(a.model.rho, Some(0.4));
        assert_eq!(a.model.search, Some(SearchKind::Exact));
        assert!(a.input.standardize && !a.input.log_returns);
        assert!(Cli::try_parse_from(["ggmsel", "simulate", "--family", "ar1", "--p", "5", "--n", "50"]).is_ok());
    }

    #[test]
    fn one_return_row_is_too_few() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("prices.csv");
        std::fs::write(&csv, "1,2\n2,3\n").unwrap();
        let args = FitArgs {
            input: InputArgs {
                input: csv,
                log_returns: true,
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(matches!(fit(&args), Err(CliError::Data(m)) if m.contains("TooFewRows")));
    }

    #[test]
    fn unknown_family_is_a_config_error() {
        let a = SimulateArgs {
            family: "lattice".into(),
            p: 5,
            n: 50,
            reps: 1,
            ..Default::default()
        };
        assert_eq!(cmd_simulate(&a), crate::error::EXIT_CONFIG);
    }
}
