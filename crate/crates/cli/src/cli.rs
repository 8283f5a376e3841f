//! Command-line entry point.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qwell_sp_core::halfline::{self, ScalingParams};
use qwell_sp_core::lab::checks::{fd_tail_from, FdTail};
use qwell_sp_core::scf::{self, Statistics};
use qwell_sp_core::{fit_exponential_rate, RateFit};
use serde::{Deserialize, Serialize};

use crate::config::{self, Mode, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{self, Artifact};
use crate::physical::{self, PhysicalParams};
use crate::sweep;

#[derive(Debug, Parser)]
#[command(name = "qwell-sp", version, about = "One-dimensional Schrödinger–Poisson boundary-layer laboratory")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full self-consistent problem (all levels) at one ε.
    SolveFull(RunArgs),
    /// First-level problem at one ε.
    SolveFirst(RunArgs),
    /// Half-line limit problem on a truncated interval.
    SolveLimit(RunArgs),
    /// ε-sweep comparing full, first-level and limit solutions.
    Sweep(RunArgs),
    /// Fermi–Dirac solves and excited-level tail ratios.
    FermiDirac(RunArgs),
    /// Scaling of the fundamental mode of α√ξ with α.
    ScalingCheck(RunArgs),
    /// ε and the thermal consistency ratio from physical parameters.
    Physical(PhysicalArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StatisticsArg {
    Boltzmann,
    FermiDirac,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    /// Comma-separated, strictly descending.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    epsilons: Option<Vec<f64>>,
    /// Number of grid intervals.
    #[arg(long, allow_hyphen_values = true)]
    n: Option<usize>,
    /// Grid spacing in ξ.
    #[arg(long, allow_hyphen_values = true)]
    h: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tol: Option<f64>,
    #[arg(long, value_enum)]
    statistics: Option<StatisticsArg>,
    /// Truncation of the half line.
    #[arg(long, allow_hyphen_values = true)]
    xi_max: Option<f64>,
    /// Keep the truncation fixed instead of doubling it.
    #[arg(long)]
    no_auto: bool,
    /// Comma-separated positive scaling factors.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alphas: Option<Vec<f64>>,
    /// Skip the Fermi–Dirac part of a sweep.
    #[arg(long)]
    no_fermi_dirac: bool,
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PhysicalArgs {
    /// JSON file with all parameters; flags are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Effective mass in kg.
    #[arg(long, allow_hyphen_values = true)]
    mass: Option<f64>,
    /// Device length L in m.
    #[arg(long, allow_hyphen_values = true)]
    length: Option<f64>,
    /// Temperature in K.
    #[arg(long, allow_hyphen_values = true)]
    temperature: Option<f64>,
    /// Surface density N_s in m⁻².
    #[arg(long, allow_hyphen_values = true)]
    surface_density: Option<f64>,
    /// Relative permittivity.
    #[arg(long, allow_hyphen_values = true)]
    eps_r: Option<f64>,
    #[arg(long, default_value = "1.054571817e-34", allow_hyphen_values = true)]
    hbar: f64,
    #[arg(long, default_value = "8.8541878128e-12", allow_hyphen_values = true)]
    eps0: f64,
    #[arg(long, default_value = "1.602176634e-19", allow_hyphen_values = true)]
    charge: f64,
    #[arg(long, default_value = "1.380649e-23", allow_hyphen_values = true)]
    kb: f64,
}

fn merge(mode: Mode, args: RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let cfg = config::read_config(path)?;
            if cfg.mode != mode {
                return Err(CliError::config(format!(
                    "{} is a {} configuration, not {}",
                    path.display(),
                    cfg.mode.name(),
                    mode.name()
                )));
            }
            cfg
        }
        None => RunConfig::new(mode),
    };
    if let Some(e) = args.epsilon {
        cfg.epsilon = Some(e);
    }
    if let Some(list) = args.epsilons {
        cfg.epsilons = Some(list);
    }
    if let Some(n) = args.n {
        cfg.grid.n = Some(n);
        cfg.grid.h = None;
    }
    if let Some(h) = args.h {
        cfg.grid.h = Some(h);
        cfg.grid.n = None;
    }
    if let Some(t) = args.tol {
        cfg.tol = t;
    }
    if let Some(s) = args.statistics {
        cfg.statistics = Some(match s {
            StatisticsArg::Boltzmann => Statistics::Boltzmann,
            StatisticsArg::FermiDirac => Statistics::FermiDirac,
        });
    }
    if let Some(x) = args.xi_max {
        cfg.truncation.xi_max = x;
    }
    if args.no_auto {
        cfg.truncation.auto = false;
    }
    if let Some(a) = args.alphas {
        cfg.alphas = Some(a);
    }
    if args.no_fermi_dirac {
        cfg.fermi_dirac = Some(false);
    }
    if let Some(dir) = args.output_dir {
        cfg.output_dir = dir;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn statistics_name(s: Statistics) -> &'static str {
    match s {
        Statistics::Boltzmann => "boltzmann",
        Statistics::FermiDirac => "fermi-dirac",
    }
}

/// Summary of a `fermi-dirac` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FermiDiracReport {
    pub epsilons: Vec<f64>,
    pub tails: Vec<FdTail>,
    pub failures: Vec<qwell_sp_core::lab::sweep::EpsilonFailure>,
    /// `log(ratio)` against `1/ε²`.
    pub fit: Option<RateFit>,
    pub ratio_decreasing: bool,
}

impl Artifact for FermiDiracReport {
    const KIND: &'static str = "fermi-dirac-report";
}

fn solve_full(cfg: &RunConfig) -> Result<String> {
    let eps = cfg.epsilon.unwrap_or_default();
    let n = cfg.intervals(1.0 / eps);
    let stats = cfg.statistics();
    let sol = match stats {
        Statistics::Boltzmann => scf::solve_full_boltzmann(eps, n, cfg.tol),
        Statistics::FermiDirac => scf::solve_full_fermi_dirac(eps, n, cfg.tol),
    }
    .map_err(|e| e.at_epsilon(eps))?;
    let json = cfg.output_dir.join("full.json");
    output::write_solution(&sol, &json)?;
    output::write_full_csv(&sol, &cfg.output_dir.join("full.csv"))?;
    Ok(format!(
        "solve-full: epsilon={eps} n={n} statistics={} levels={} iterations={} J={:.12e} residual={:.3e} -> {}",
        statistics_name(stats),
        sol.occupation.levels_used(),
        sol.iterations,
        sol.functional_value,
        sol.residual_h1,
        json.display()
    ))
}

fn solve_first(cfg: &RunConfig) -> Result<String> {
    let eps = cfg.epsilon.unwrap_or_default();
    let n = cfg.intervals(1.0 / eps);
    let sol = scf::solve_first_level(eps, n, cfg.tol).map_err(|e| e.at_epsilon(eps))?;
    let json = cfg.output_dir.join("first.json");
    output::write_solution(&sol, &json)?;
    output::write_first_csv(&sol, &cfg.output_dir.join("first.csv"))?;
    Ok(format!(
        "solve-first: epsilon={eps} n={n} iterations={} E1={:.12} J={:.12e} residual={:.3e} -> {}",
        sol.iterations,
        sol.e1,
        sol.functional_value,
        sol.residual,
        json.display()
    ))
}

fn solve_limit(cfg: &RunConfig) -> Result<String> {
    let xi = cfg.truncation.xi_max;
    let n = cfg.intervals(xi);
    let sol = if cfg.truncation.auto {
        halfline::solve_limit_problem(xi, n, cfg.tol)?
    } else {
        halfline::solve_limit_at_truncation(xi, n, cfg.tol)?
    };
    let json = cfg.output_dir.join("limit.json");
    output::write_solution(&sol, &json)?;
    output::write_limit_csv(&sol, &cfg.output_dir.join("limit.csv"))?;
    let tail = match halfline::tail_decay_fit(&sol) {
        Ok(fit) => format!(
            " tail_rate={:.6} barrier_rate={:.6} r2={:.6}",
            fit.rate_c,
            halfline::barrier_rate(&sol),
            fit.r_squared
        ),
        Err(e) => format!(" tail_fit=({e})"),
    };
    Ok(format!(
        "solve-limit: truncation={} e10={:.12} U(Xi)={:.12} J0={:.12}{tail} -> {}",
        sol.truncation,
        sol.e10,
        sol.u_limit_estimate,
        sol.j0_value,
        json.display()
    ))
}

fn fmt_fit(fit: &Option<RateFit>) -> String {
    match fit {
        Some(f) => format!("c={:.4e} r2={:.4}", f.rate_c, f.r_squared),
        None => "none".into(),
    }
}

fn run_sweep(cfg: &RunConfig) -> Result<String> {
    let report = sweep::run_sweep(&cfg.sweep_config())?;
    let json = cfg.output_dir.join("report.json");
    output::write_artifact(&report, &json)?;
    output::write_curves_csv(&report, &cfg.output_dir.join("curves.csv"))?;
    output::write_summary_csv(&report, &cfg.output_dir.join("summary.csv"))?;
    Ok(format!(
        "sweep: {} of {} epsilons converged; full-vs-first {}; first-vs-limit {}; min gap {:.6}; chain {} -> {}",
        report.epsilons.len(),
        report.epsilons.len() + report.failures.len(),
        fmt_fit(&report.fit_full_first),
        fmt_fit(&report.fit_first_limit),
        report.measured_gap,
        if report.chain_ok.iter().all(|&c| c) { "ok" } else { "violated" },
        json.display()
    ))
}

fn run_fermi_dirac(cfg: &RunConfig) -> Result<String> {
    let mut tails = Vec::new();
    let mut failures = Vec::new();
    for eps in cfg.epsilon_list() {
        let n = cfg.intervals(1.0 / eps);
        match scf::solve_full_fermi_dirac(eps, n, cfg.tol).and_then(|s| fd_tail_from(&s)) {
            Ok(t) => tails.push(t),
            Err(e) => failures.push(qwell_sp_core::lab::sweep::EpsilonFailure {
                epsilon: eps,
                error: e.at_epsilon(eps).to_string(),
            }),
        }
    }
    if tails.is_empty() {
        return Err(qwell_sp_core::Error::SweepFailure {
            attempted: failures.len(),
        }
        .into());
    }
    let samples: Vec<(f64, f64)> = tails.iter().filter(|t| t.ratio > 0.0).map(|t| (t.epsilon, t.ratio)).collect();
    let report = FermiDiracReport {
        epsilons: tails.iter().map(|t| t.epsilon).collect(),
        fit: fit_exponential_rate(&samples, 2).ok(),
        ratio_decreasing: tails.windows(2).all(|w| w[1].ratio < w[0].ratio),
        tails,
        failures,
    };
    let json = cfg.output_dir.join("fermi_dirac.json");
    output::write_artifact(&report, &json)?;
    let col = |f: fn(&FdTail) -> f64| report.tails.iter().map(f).collect::<Vec<f64>>();
    output::write_csv(
        &cfg.output_dir.join("fermi_dirac.csv"),
        &["epsilon", "fermi_level", "tail_ratio", "constraint_residual", "levels"],
        &[
            &col(|t| t.epsilon),
            &col(|t| t.fermi_level),
            &col(|t| t.ratio),
            &col(|t| t.constraint_residual),
            &col(|t| t.levels as f64),
        ],
    )?;
    let worst = report.tails.iter().map(|t| t.constraint_residual).fold(0.0, f64::max);
    Ok(format!(
        "fermi-dirac: {} epsilons; max constraint residual {worst:.3e}; ratio decreasing {}; fit {} -> {}",
        report.epsilons.len(),
        report.ratio_decreasing,
        fmt_fit(&report.fit),
        json.display()
    ))
}

fn scaling_check(cfg: &RunConfig) -> Result<String> {
    if cfg.grid.n.is_some() {
        return Err(CliError::config("scaling-check uses a fixed spacing; give --h, not --n"));
    }
    let params = ScalingParams {
        h: cfg.grid.h.unwrap_or(ScalingParams::default().h),
        base_truncation: cfg.truncation.xi_max,
    };
    let report = halfline::check_scaling_law(&cfg.alphas(), &params)?;
    output::write_artifact(&report, &cfg.output_dir.join("scaling.json"))?;
    let col = |f: fn(&halfline::ScalingEntry) -> f64| report.entries.iter().map(f).collect::<Vec<f64>>();
    output::write_csv(
        &cfg.output_dir.join("scaling.csv"),
        &["alpha", "truncation", "energy", "ratio", "expected", "deviation"],
        &[
            &col(|e| e.alpha),
            &col(|e| e.truncation),
            &col(|e| e.energy),
            &col(|e| e.ratio),
            &col(|e| e.expected),
            &col(|e| e.deviation),
        ],
    )?;
    let mut out = format!(
        "{:>8} {:>10} {:>16} {:>14} {:>14} {:>10}\n",
        "alpha", "truncation", "E1", "ratio", "alpha^(4/5)", "deviation"
    );
    for e in &report.entries {
        out.push_str(&format!(
            "{:>8} {:>10.2} {:>16.12} {:>14.10} {:>14.10} {:>10.2e}\n",
            e.alpha, e.truncation, e.energy, e.ratio, e.expected, e.deviation
        ));
    }
    out.push_str(&format!(
        "scaling-check: reference E1[sqrt] = {:.12}, max deviation {:.3e}",
        report.reference, report.max_deviation
    ));
    Ok(out)
}

fn physical(args: PhysicalArgs) -> Result<String> {
    let params = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str::<PhysicalParams>(&text).map_err(|e| CliError::Format {
                path: path.clone(),
                message: e.to_string(),
            })?
        }
        None => {
            let need = |v: Option<f64>, name: &str| v.ok_or_else(|| CliError::config(format!("--{name} is required")));
            PhysicalParams {
                hbar: args.hbar,
                mass: need(args.mass, "mass")?,
                length: need(args.length, "length")?,
                temperature: need(args.temperature, "temperature")?,
                surface_density: need(args.surface_density, "surface-density")?,
                eps0: args.eps0,
                eps_r: need(args.eps_r, "eps-r")?,
                charge: args.charge,
                kb: args.kb,
            }
        }
    };
    let s = physical::epsilon_from_physical(&params)?;
    Ok(format!(
        "physical: debye_length={:.6e} m epsilon={:.10} thermal_consistency={:.6e}",
        s.debye_length, s.epsilon, s.thermal_consistency
    ))
}

fn execute(command: Command) -> Result<String> {
    let (mode, args) = match command {
        Command::Physical(args) => return physical(args),
        Command::SolveFull(a) => (Mode::SolveFull, a),
        Command::SolveFirst(a) => (Mode::SolveFirst, a),
        Command::SolveLimit(a) => (Mode::SolveLimit, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::FermiDirac(a) => (Mode::FermiDirac, a),
        Command::ScalingCheck(a) => (Mode::ScalingCheck, a),
    };
    let cfg = merge(mode, args)?;
    match mode {
        Mode::SolveFull => solve_full(&cfg),
        Mode::SolveFirst => solve_first(&cfg),
        Mode::SolveLimit => solve_limit(&cfg),
        Mode::Sweep => run_sweep(&cfg),
        Mode::FermiDirac => run_fermi_dirac(&cfg),
        Mode::ScalingCheck => scaling_check(&cfg),
    }
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code: 0 success, 2 configuration error, 3 solver failure, 4 IO error.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match std::panic::catch_unwind(|| execute(cli.command)) {
        Ok(Ok(summary)) => {
            println!("{summary}");
            0
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => {
            eprintln!("error: internal failure");
            3
        }
    }
}

