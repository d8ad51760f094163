//! `scair`: run simulation grids and inspect their intermediate products.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 feasible-set limit.

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scair::export::{write_aggregate_csv, write_cells_csv, write_series_csv};
use scair::ingest::IngestError;
use scair::paths::PathError;
use scair::simulation::{default_budgets, default_lambdas, GridError, SimulationError};
use scair::transition::TransitionError;
use scair::*;

#[derive(Parser)]
#[command(name = "scair", version, about = "Crowd-aware itinerary simulation for theme parks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every (park, budget, lambda, strategy) cell and write CSV reports.
    Run(RunArgs),
    /// Write the feasible itineraries for one budget.
    Paths(PathsArgs),
    /// Write the transition matrix for one budget and arrival interval.
    Matrix(MatrixArgs),
    /// Write a synthetic park file.
    GenPark(GenArgs),
}

#[derive(Args)]
struct ParkArgs {
    /// Park CSV file; repeat for several parks.
    #[arg(long = "park", value_name = "FILE")]
    parks: Vec<PathBuf>,
    /// Generate synthetic parks with N facilities instead.
    #[arg(long = "gen", value_name = "N")]
    generate: Option<usize>,
    /// Seeds for generated parks, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "42")]
    seed: Vec<u64>,
    /// Start facility id.
    #[arg(long, default_value_t = 0)]
    start: usize,
    /// Meters per minute.
    #[arg(long, default_value_t = 60.0)]
    walking_speed: f64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    park: ParkArgs,
    /// Time budgets in minutes [default: 60,90,...,360].
    #[arg(long, value_delimiter = ',')]
    budgets: Vec<f64>,
    /// Arrival intervals in minutes [default: 0.01..0.09,0.1..1.0].
    #[arg(long, value_delimiter = ',')]
    lambdas: Vec<f64>,
    /// Any of disop, popop, podop, scair [default: all].
    #[arg(long, value_delimiter = ',')]
    strategies: Vec<Strategy>,
    /// Hop distance cap in meters.
    #[arg(long, default_value_t = DEFAULT_DIST_CAP)]
    dist_cap: f64,
    /// Minutes during which agents arrive [default: the cell's budget].
    #[arg(long)]
    horizon: Option<f64>,
    /// Floor on queue time in utility denominators.
    #[arg(long, default_value_t = DEFAULT_Q_MIN)]
    q_min: f64,
    /// Largest feasible set allowed per (park, budget).
    #[arg(long, default_value_t = DEFAULT_MAX_PATHS)]
    max_paths: usize,
    /// Output directory.
    #[arg(long, default_value = "scair-out")]
    out: PathBuf,
    /// Worker threads [default: all cores].
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct PathsArgs {
    #[command(flatten)]
    park: ParkArgs,
    #[arg(long)]
    budget: f64,
    #[arg(long, default_value_t = DEFAULT_DIST_CAP)]
    dist_cap: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_PATHS)]
    max_paths: usize,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixArgs {
    #[command(flatten)]
    park: ParkArgs,
    #[arg(long)]
    budget: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = DEFAULT_DIST_CAP)]
    dist_cap: f64,
    #[arg(long, default_value_t = DEFAULT_Q_MIN)]
    q_min: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_PATHS)]
    max_paths: usize,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Number of facilities.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Limit(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Limit(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Limit(m) => f.write_str(m),
        }
    }
}

impl From<PathError> for Failure {
    fn from(e: PathError) -> Self {
        match e {
            PathError::TooManyPaths { .. } => Failure::Limit(e.to_string()),
            PathError::BadBudget(_) | PathError::BadDistCap(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<TransitionError> for Failure {
    fn from(e: TransitionError) -> Self {
        match e {
            TransitionError::BadLambda(_) | TransitionError::BadQMin(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<GridError> for Failure {
    fn from(e: GridError) -> Self {
        if e.is_resource_limit() {
            Failure::Limit(e.to_string())
        } else if matches!(e.source, SimulationError::Config(_)) {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

fn io_failure(path: &FsPath, e: io::Error) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--{name} must be a positive number (got {v})")))
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl ParkArgs {
    fn load(&self) -> Result<Vec<NamedPark>, Failure> {
        positive("walking-speed", self.walking_speed)?;
        let mut parks = Vec::new();
        for path in &self.parks {
            let park = load_park(path, self.start, self.walking_speed).map_err(|e| match e {
                IngestError::Open { .. } => Failure::Data(e.to_string()),
                _ => Failure::Data(format!("{}: {e}", path.display())),
            })?;
            let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into());
            parks.push(NamedPark::new(name, park));
        }
        if let Some(n) = self.generate {
            for &seed in &self.seed {
                let park = generate_park(&SyntheticParkSpec::new(n, seed), self.walking_speed)
                    .map_err(|e| Failure::Usage(e.to_string()))?
                    .with_start(self.start)
                    .map_err(|e| Failure::Usage(e.to_string()))?;
                parks.push(NamedPark::new(format!("synth{n}-s{seed}"), park));
            }
        }
        if parks.is_empty() {
            return Err(Failure::Usage("no park given; use --park FILE or --gen N".into()));
        }
        Ok(parks)
    }

    fn load_one(&self) -> Result<NamedPark, Failure> {
        let mut parks = self.load()?;
        if parks.len() != 1 {
            return Err(Failure::Usage(format!("this command takes one park, got {}", parks.len())));
        }
        Ok(parks.remove(0))
    }

    fn echo(&self, parks: &[NamedPark]) -> Vec<String> {
        vec![
            format!("parks={}", join(&parks.iter().map(|p| p.name.as_str()).collect::<Vec<_>>())),
            format!("start={}", self.start),
            format!("walking_speed={}", self.walking_speed),
        ]
    }
}

/// Stdout or a file, with the echo block written first.
fn open_output(out: Option<&PathBuf>, echo: &[String]) -> Result<Box<dyn Write>, Failure> {
    let mut w: Box<dyn Write> = match out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| io_failure(path, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    for line in echo {
        writeln!(w, "# {line}").map_err(|e| Failure::Data(e.to_string()))?;
    }
    Ok(w)
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let budgets = if args.budgets.is_empty() { default_budgets() } else { args.budgets.clone() };
    let lambdas = if args.lambdas.is_empty() { default_lambdas() } else { args.lambdas.clone() };
    let strategies = if args.strategies.is_empty() { Strategy::ALL.to_vec() } else { args.strategies.clone() };
    for &b in &budgets {
        positive("budgets", b)?;
    }
    for &l in &lambdas {
        positive("lambdas", l)?;
    }
    positive("dist-cap", args.dist_cap)?;
    positive("q-min", args.q_min)?;
    if let Some(h) = args.horizon {
        positive("horizon", h)?;
    }
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().map_err(|e| Failure::Usage(e.to_string()))?;
    }

    let parks = args.park.load()?;
    let spec = GridSpec {
        budgets,
        lambdas,
        strategies,
        dist_cap: args.dist_cap,
        horizon: args.horizon,
        q_min: args.q_min,
        max_paths: args.max_paths,
        keep_agents: false,
    };
    // The thread count is left out on purpose: output must not depend on it.
    let mut echo = vec!["scair run".to_string()];
    echo.extend(args.park.echo(&parks));
    echo.extend([
        format!("budgets={}", join(&spec.budgets)),
        format!("lambdas={}", join(&spec.lambdas)),
        format!("strategies={}", join(&spec.strategies)),
        format!("dist_cap={}", spec.dist_cap),
        format!("horizon={}", spec.horizon.map_or("budget".to_string(), |h| h.to_string())),
        format!("q_min={}", spec.q_min),
        format!("max_paths={}", spec.max_paths),
    ]);

    let cells = simulate_grid(&parks, &spec)?;
    let rows: Vec<CellRow> = cells.iter().map(CellRow::from).collect();
    let agg = aggregate(&rows).map_err(|e| Failure::Data(e.to_string()))?;

    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    let write = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> io::Result<()>| -> Result<PathBuf, Failure> {
        let path = args.out.join(name);
        let mut w = BufWriter::new(File::create(&path).map_err(|e| io_failure(&path, e))?);
        f(&mut w).map_err(|e| io_failure(&path, e))?;
        Ok(path)
    };
    let written = [
        write("cells.csv", &|w| write_cells_csv(w, &rows, &echo))?,
        write("aggregate.csv", &|w| write_aggregate_csv(w, &agg, &echo))?,
        write("series.csv", &|w| write_series_csv(w, &agg, &echo))?,
    ];

    let mut out = io::stdout().lock();
    let _ = writeln!(
        out,
        "{:<16} {:<8} {:>6} {:>22} {:>10} {:>16}",
        "park", "strategy", "cells", "qt_ratio (mean±std)", "avg_pop", "qt_ratio_pairwise"
    );
    for s in summarize(&rows) {
        let _ = writeln!(
            out,
            "{:<16} {:<8} {:>6} {:>22} {:>10.2} {:>16.4}",
            s.park,
            s.strategy.name(),
            s.cells,
            format!("{:.4}±{:.4}", s.qt_ratio_mean, s.qt_ratio_std),
            s.avg_pop_mean,
            s.qt_ratio_markov_mean
        );
    }
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn paths(args: PathsArgs) -> Result<(), Failure> {
    positive("budget", args.budget)?;
    positive("dist-cap", args.dist_cap)?;
    let named = args.park.load_one()?;
    let fs = find_feasible_paths(&named.park, args.budget, args.dist_cap, args.max_paths)?;
    let mut echo = vec!["scair paths".to_string()];
    echo.extend(args.park.echo(std::slice::from_ref(&named)));
    echo.extend([
        format!("budget={}", args.budget),
        format!("dist_cap={}", args.dist_cap),
        format!("max_paths={}", args.max_paths),
    ]);
    let w = open_output(args.out.as_ref(), &echo)?;
    fs.write_csv(w).map_err(|e| Failure::Data(e.to_string()))
}

fn matrix(args: MatrixArgs) -> Result<(), Failure> {
    positive("budget", args.budget)?;
    positive("lambda", args.lambda)?;
    positive("dist-cap", args.dist_cap)?;
    positive("q-min", args.q_min)?;
    let named = args.park.load_one()?;
    let fs = find_feasible_paths(&named.park, args.budget, args.dist_cap, args.max_paths)?;
    let tm = construct_tm(&named.park, &fs, args.lambda, args.q_min)?;
    let mut echo = vec!["scair matrix".to_string()];
    echo.extend(args.park.echo(std::slice::from_ref(&named)));
    echo.extend([
        format!("budget={}", args.budget),
        format!("lambda={}", args.lambda),
        format!("dist_cap={}", args.dist_cap),
        format!("q_min={}", args.q_min),
        format!("max_paths={}", args.max_paths),
    ]);
    let w = open_output(args.out.as_ref(), &echo)?;
    tm.write_csv(w).map_err(|e| Failure::Data(e.to_string()))?;

    // Keep stdout clean when it carries the matrix itself.
    let sums = tm.row_sums();
    let report: Box<dyn Write> = if args.out.is_some() { Box::new(io::stdout()) } else { Box::new(io::stderr()) };
    let mut report = BufWriter::new(report);
    for (i, s) in sums.iter().enumerate() {
        let _ = writeln!(report, "row {i} sum {s:.6} next {}", tm.next_path(i)?);
    }
    Ok(())
}

fn gen_park(args: GenArgs) -> Result<(), Failure> {
    let spec = SyntheticParkSpec::new(args.n, args.seed);
    let park = generate_park(&spec, scair::park::DEFAULT_WALKING_SPEED).map_err(|e| Failure::Usage(e.to_string()))?;
    let (lat0, lat1, lon0, lon1) = spec.bbox;
    let echo = [
        "scair gen-park".to_string(),
        format!("n={} seed={}", args.n, args.seed),
        format!("bbox={lat0},{lat1},{lon0},{lon1}"),
        format!(
            "duration={}..{} popularity={}..{} capacity={}",
            spec.duration_range.0,
            spec.duration_range.1,
            spec.popularity_range.0,
            spec.popularity_range.1,
            spec.capacity
        ),
    ];
    let w = open_output(args.out.as_ref(), &echo)?;
    write_park(&park, w).map_err(|e| Failure::Data(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Paths(a) => paths(a),
        Command::Matrix(a) => matrix(a),
        Command::GenPark(a) => gen_park(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
