//! The `enselect` command-line interface.
//!
//! Every command reads an optional TOML config, applies flag overrides and
//! writes CSV (tables) or JSON (simulation records) to `--out` or stdout.
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure, 3 failed comparison.

pub mod compare;
pub mod config;
pub mod tables;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::power::{power_curve, CurveMethod};
use crate::recon_limit::{phase_boundary_curve, Algorithm};
use crate::simulator::{run_sweep, EmpiricalResult, ExperimentPlan};
use crate::tuning::{optimal_lambda, Estimator};
use compare::Summary;
use config::{parse_lambda_grid, RunConfig};
use tables::{read_csv, write_csv, CurveRow, LambdaRow, PhaseRow, TheoryRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_COMPARE: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TheoryArg {
    Ss,
    Dko,
    Lasso,
}

impl From<TheoryArg> for Estimator {
    fn from(t: TheoryArg) -> Self {
        match t {
            TheoryArg::Ss => Estimator::Ss,
            TheoryArg::Dko => Estimator::Dko,
            TheoryArg::Lasso => Estimator::Lasso,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveArg {
    Ss,
    Dko,
    Ko,
    Lasso,
}

impl From<CurveArg> for CurveMethod {
    fn from(c: CurveArg) -> Self {
        match c {
            CurveArg::Ss => CurveMethod::Ss,
            CurveArg::Dko => CurveMethod::Dko,
            CurveArg::Ko => CurveMethod::Ko,
            CurveArg::Lasso => CurveMethod::Lasso,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "enselect", version, about = "Replica theory and simulation of stability selection and derandomized knockoffs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed of the simulator.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true, conflicts_with = "lambda_grid")]
    pub lambda: Option<f64>,
    /// Comma-separated values or `lo:hi:count` log-spaced.
    #[arg(long, global = true)]
    pub lambda_grid: Option<String>,
    #[arg(long, global = true)]
    pub mu_b: Option<f64>,
    #[arg(long, global = true)]
    pub pi_th: Option<f64>,
    #[arg(long, global = true)]
    pub z_th: Option<f64>,
    /// Number of variables of simulated datasets.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub repeats: Option<usize>,
    #[arg(long, global = true)]
    pub realizations: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the self-consistent equations over the λ grid (CSV).
    Solve { theory: TheoryArg },
    /// TPR against FDR at λ* or the given λ (CSV).
    PowerCurve { algorithm: CurveArg },
    /// Critical sample ratio of noiseless recovery against ρ (CSV).
    PhaseBoundary {
        /// Comma-separated ρ values in (0, 1).
        #[arg(long, value_delimiter = ',')]
        rho_grid: Option<Vec<f64>>,
    },
    /// Monte Carlo statistics over the λ grid (JSON).
    Simulate { algorithm: TheoryArg },
    /// Per-cell verdicts of a theory CSV against a simulation JSON (CSV).
    Compare { theory: PathBuf, empirical: PathBuf },
    /// λ minimizing the asymptotic prediction error (CSV); all estimators by default.
    LambdaOpt { estimator: Option<TheoryArg> },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("comparison failed: {0}")]
    Compare(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Lib(_) => EXIT_USAGE,
            CliError::Compare(_) => EXIT_COMPARE,
        }
    }
}

impl Cli {
    /// The configuration file (or defaults) with every flag applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let p = &mut c.problem;
        macro_rules! set {
            ($flag:expr, $field:expr) => {
                if let Some(v) = $flag {
                    $field = v;
                }
            };
        }
        set!(self.alpha, p.alpha);
        set!(self.rho, p.rho);
        set!(self.delta, p.delta);
        set!(self.mu_b, p.mu_b);
        if let Some(l) = self.lambda {
            p.lambda = l;
            c.lambda_grid = None;
        }
        if let Some(g) = &self.lambda_grid {
            c.lambda_grid = Some(parse_lambda_grid(g).map_err(Error::Config)?);
        }
        set!(self.pi_th, c.thresholds.pi_th);
        set!(self.z_th, c.thresholds.z_th);
        set!(self.seed, c.simulation.seed);
        set!(self.n, c.simulation.n);
        set!(self.repeats, c.simulation.repeats);
        set!(self.realizations, c.simulation.realizations);
        if self.workers.is_some() {
            c.workers = self.workers;
        }
        if let Command::PhaseBoundary { rho_grid: Some(g) } = &self.command {
            c.phase.rho_grid = g.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> std::result::Result<(), CliError> {
    let config = cli.resolve()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut out = Vec::new();
    pool.install(|| execute(&cli.command, &config, cli.lambda, &mut out))?;
    emit(cli.out.as_deref(), &out)?;
    match &cli.command {
        Command::Compare { .. } => verdict_status(&out),
        _ => Ok(()),
    }
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn verdict_status(csv_bytes: &[u8]) -> std::result::Result<(), CliError> {
    let verdicts: Vec<compare::Verdict> = read_csv(csv_bytes)?;
    let s = Summary::of(&verdicts);
    eprintln!(
        "{} cells: {} within {} SE, {} within {} SE, max |z| = {:.3}",
        s.cells,
        s.within_pass,
        compare::Z_PASS,
        s.within_hard,
        compare::Z_HARD,
        s.max_z
    );
    if s.passed() {
        Ok(())
    } else {
        Err(CliError::Compare(format!(
            "need {:.0}% of cells within {} SE and all within {} SE",
            100.0 * compare::PASS_FRACTION,
            compare::Z_PASS,
            compare::Z_HARD
        )))
    }
}

/// Runs one command, writing its table or record into `out`. `lambda_flag`
/// is the λ given on the command line, which replaces λ* in `power-curve`.
pub fn execute(command: &Command, c: &RunConfig, lambda_flag: Option<f64>, out: &mut Vec<u8>) -> Result<()> {
    match command {
        Command::Solve { theory } => {
            let estimator = Estimator::from(*theory);
            let rows = c
                .lambdas()?
                .par_iter()
                .map(|&l| TheoryRow::solve(estimator, &c.problem.with_lambda(l), &c.thresholds, &c.solver))
                .collect::<Result<Vec<_>>>()?;
            let stalled: Vec<f64> = rows.iter().filter(|r| !r.converged).map(|r| r.lambda).collect();
            if !stalled.is_empty() {
                eprintln!("warning: not converged at λ = {stalled:?}");
            }
            write_csv(&rows, out)
        }
        Command::PowerCurve { algorithm } => {
            let curve = power_curve((*algorithm).into(), &c.problem, lambda_flag, &c.solver)?;
            let rows: Vec<CurveRow> = curve
                .curve
                .points
                .iter()
                .map(|p| CurveRow {
                    method: curve.method,
                    lambda: curve.lambda.unwrap_or(p.threshold),
                    threshold: p.threshold,
                    fdr: p.fdr,
                    tpr: p.tpr,
                })
                .collect();
            write_csv(&rows, out)
        }
        Command::PhaseBoundary { .. } => {
            let algorithms = [Algorithm::Ss { mu_b: 1.0 }, Algorithm::Ss { mu_b: 2.0 }, Algorithm::Dko];
            let curves = algorithms
                .par_iter()
                .map(|&a| phase_boundary_curve(a, &c.phase.rho_grid))
                .collect::<Result<Vec<_>>>()?;
            let rows: Vec<PhaseRow> = curves
                .into_iter()
                .flatten()
                .map(|p| PhaseRow {
                    algorithm: match p.algorithm {
                        Algorithm::Ss { .. } => "ss".into(),
                        Algorithm::Dko => "dko".into(),
                    },
                    mu_b: match p.algorithm {
                        Algorithm::Ss { mu_b } => Some(mu_b),
                        Algorithm::Dko => None,
                    },
                    rho: p.rho,
                    alpha_critical: p.alpha_critical,
                })
                .collect();
            write_csv(&rows, out)
        }
        Command::Simulate { algorithm } => {
            let results = simulate(Estimator::from(*algorithm), c)?;
            serde_json::to_writer_pretty(&mut *out, &results)?;
            out.push(b'\n');
            Ok(())
        }
        Command::Compare { theory, empirical } => {
            let rows: Vec<TheoryRow> = read_csv(open(theory)?)?;
            let sims: Vec<EmpiricalResult> = serde_json::from_reader(open(empirical)?)?;
            write_csv(&compare::compare(&rows, &sims)?, out)
        }
        Command::LambdaOpt { estimator } => {
            let estimators = match estimator {
                Some(e) => vec![Estimator::from(*e)],
                None => vec![Estimator::Ss, Estimator::Dko, Estimator::Lasso],
            };
            let rows = estimators
                .par_iter()
                .map(|&e| {
                    let opt = optimal_lambda(e, &c.problem, &c.solver)?;
                    Ok(LambdaRow {
                        estimator: e,
                        mu_b: (e == Estimator::Ss).then_some(c.problem.mu_b),
                        lambda: opt.lambda,
                        prediction_error: opt.prediction_error,
                        evaluations: opt.evaluations,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            write_csv(&rows, out)
        }
    }
}

fn open(path: &Path) -> Result<std::io::BufReader<std::fs::File>> {
    let f = std::fs::File::open(path).map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    Ok(std::io::BufReader::new(f))
}

/// Simulation over the configured λ grid, one result per λ in ascending order.
pub fn simulate(algorithm: Estimator, c: &RunConfig) -> Result<Vec<EmpiricalResult>> {
    let mut plan = ExperimentPlan::new(c.problem, algorithm, c.lambdas()?);
    plan.n = c.simulation.n;
    plan.repeats = c.simulation.repeats;
    plan.realizations = c.simulation.realizations;
    plan.master_seed = c.simulation.seed;
    plan.thresholds = c.thresholds;
    plan.lasso = c.lasso;
    run_sweep(&plan)
}
