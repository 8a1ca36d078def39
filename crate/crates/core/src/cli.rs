//! `pbc <check|simulate|scan|constants|estimate> [--config FILE] [key=value ...]`
//!
//! Exit codes: 0 success, 1 failed hypothesis (`check` with any failed clause,
//! `constants` whose hitting-time hypotheses fail without `force=true`), 2
//! configuration or I/O error. `PBC_THREADS` caps the worker pool.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::analysis::{
    additive_target, admissible_additive, admissible_deterministic, admissible_multiplicative, AdmissibilityReport,
    AnalysisError, DerivedConstants,
};
use crate::config::{ConfigError, ExperimentConfig, SchemeKind};
use crate::control::{AlphaSequence, ControlScheme};
use crate::maps::LipschitzEstimate;
use crate::simulate::{parameter_scan, run_ensemble, AuditContext, EnsembleConfig, ScanGrid, ScanScheme, SimError, Simulation};

pub const THREADS_VAR: &str = "PBC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "pbc", version, about = "Prediction-based control under stochastic perturbation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the admissibility conditions for the configured parameters.
    Check(CommonArgs),
    /// Run an ensemble and write trajectory and statistics CSVs.
    Simulate(CommonArgs),
    /// Sweep an (alpha, l) grid and write the scan CSV.
    Scan(CommonArgs),
    /// Print the derived constants as `name value` lines.
    Constants(CommonArgs),
    /// Estimate M and M_eps on a grid and verify the map assumptions.
    Estimate(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Flat key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// key=value overrides applied after the file.
    overrides: Vec<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{THREADS_VAR} must be an integer >= 1, got `{0}`")]
    Threads(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Analysis(_) => 1,
            _ => 2,
        }
    }
}

fn io_err(path: &str) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_string(),
        message: e.to_string(),
    }
}

fn threads() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Threads(v)),
        },
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn load(args: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let text = match &args.config {
        Some(path) => {
            let p = path.display().to_string();
            Some(std::fs::read_to_string(path).map_err(io_err(&p))?)
        }
        None => None,
    };
    Ok(ExperimentConfig::parse(text.as_deref(), &args.overrides)?)
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    let (args, job): (&CommonArgs, fn(&ExperimentConfig, &mut dyn Write) -> Result<i32, CliError>) = match &command {
        Command::Check(a) => (a, check),
        Command::Simulate(a) => (a, simulate),
        Command::Scan(a) => (a, scan),
        Command::Constants(a) => (a, constants),
        Command::Estimate(a) => (a, estimate),
    };
    let cfg = load(args)?;
    let w = |e: io::Error| CliError::Io {
        path: "stdout".into(),
        message: e.to_string(),
    };
    for line in cfg.echo() {
        writeln!(out, "# {line}").map_err(w)?;
    }
    job(&cfg, out)
}

fn stdout_err(e: io::Error) -> CliError {
    CliError::Io {
        path: "stdout".into(),
        message: e.to_string(),
    }
}

fn write_report(out: &mut dyn Write, r: &AdmissibilityReport) -> io::Result<()> {
    writeln!(out, "REPORT {}", r.theorem)?;
    for c in &r.clause_results {
        writeln!(out, "{}\t{}\t{}", c.text, if c.pass { "PASS" } else { "FAIL" }, c.margin)?;
    }
    match r.l_interval {
        Some((lo, hi)) => writeln!(out, "L_INTERVAL {lo} {hi}"),
        None => writeln!(out, "L_INTERVAL EMPTY"),
    }
}

fn check(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let model = cfg.model();
    let lip = cfg.lipschitz(&model)?;
    let scheme = cfg.scheme()?;
    let nu = cfg.nu;
    let reports: Vec<AdmissibilityReport> = match scheme {
        ControlScheme::MultiplicativePbc { alpha, l } => {
            let all = admissible_multiplicative(alpha, &lip, nu, Some(l));
            let pick: &[usize] = if nu == 1.0 { &[0, 1, 3, 4] } else { &[2, 3, 4] };
            pick.iter().map(|&i| all[i].clone()).collect()
        }
        ControlScheme::AdditivePbc { alpha, l } => {
            let mut v = vec![admissible_additive(alpha, &model, &lip, nu, Some(l))?];
            if let Some(eps1) = cfg.eps1 {
                v.push(additive_target(alpha, &model, &lip, nu, eps1, Some(l))?);
            }
            v
        }
        ControlScheme::DeterministicPbc(seq) => {
            let (a, b) = match seq {
                AlphaSequence::Constant(a) => (a, a),
                AlphaSequence::IidOnInterval { lo, hi } => (lo, hi),
            };
            vec![admissible_deterministic(a, b, &lip)]
        }
        ControlScheme::Uncontrolled | ControlScheme::MapMultiplicative { .. } => Vec::new(),
    };
    writeln!(out, "# lipschitz M={} M_eps={} eps={}", lip.analysis_m(), lip.analysis_m_eps(), lip.eps)
        .map_err(stdout_err)?;
    if reports.is_empty() {
        writeln!(out, "REPORT none").map_err(stdout_err)?;
        return Ok(0);
    }
    for r in &reports {
        write_report(out, r).map_err(stdout_err)?;
    }
    Ok(if reports.iter().all(|r| r.all_pass()) { 0 } else { 1 })
}

fn create(path: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn simulate(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let model = cfg.model();
    let scheme = cfg.scheme()?;
    let lip = cfg.lipschitz(&model)?;
    let audit = AuditContext::new(&model, &scheme, &lip, cfg.nu);
    let sim = Simulation::new(model, scheme, cfg.noise_spec(), cfg.eps)?;
    let ens = EnsembleConfig {
        x0: cfg.x0()?.to_vec(),
        n_steps: cfg.n_steps,
        n_traj: cfg.n_traj,
        threads: threads()?,
    };
    let e = run_ensemble(&sim, &ens, Some(&audit))?;

    let mut f = create(&cfg.out_traj)?;
    e.write_trajectories_csv(&mut f, cfg.dump_max)
        .and_then(|_| f.flush())
        .map_err(io_err(&cfg.out_traj))?;
    let mut f = create(&cfg.out_stats)?;
    e.stats.write_csv(&mut f).and_then(|_| f.flush()).map_err(io_err(&cfg.out_stats))?;

    for (k, v) in e.stats.summary() {
        writeln!(out, "{k} {v}").map_err(stdout_err)?;
    }
    Ok(0)
}

fn scan(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let which = match cfg.scheme {
        SchemeKind::Mult => ScanScheme::Multiplicative,
        SchemeKind::Add => ScanScheme::Additive,
        _ => {
            return Err(ConfigError::Invalid {
                key: "scheme".into(),
                reason: "scan supports mult and add".into(),
            }
            .into())
        }
    };
    let model = cfg.model();
    let lip = cfg.lipschitz(&model)?;
    let grid = ScanGrid {
        alpha: cfg.alpha.map(|a| a.grid()).unwrap_or_default(),
        l: cfg.l.grid(),
    };
    let ens = EnsembleConfig {
        x0: cfg.x0()?.to_vec(),
        n_steps: cfg.n_steps,
        n_traj: cfg.n_traj,
        threads: threads()?,
    };
    let table = parameter_scan(&model, which, &cfg.noise_spec(), &grid, &lip, &ens, cfg.eps)?;
    let mut f = create(&cfg.out_scan)?;
    table.write_csv(&mut f).and_then(|_| f.flush()).map_err(io_err(&cfg.out_scan))?;
    writeln!(out, "rows {}", table.rows.len()).map_err(stdout_err)?;
    Ok(0)
}

fn constants(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let model = cfg.model();
    let scheme = cfg.scheme()?;
    let lip = cfg.lipschitz(&model)?;
    let d = DerivedConstants::compute(&model, &scheme, &lip, cfg.nu, cfg.lip_eps(&model), cfg.force)?;
    for (k, v) in d.lines() {
        writeln!(out, "{k} {v}").map_err(stdout_err)?;
    }
    if let Some(Err(e)) = &d.hitting {
        writeln!(out, "hitting FAIL {e}").map_err(stdout_err)?;
        return Ok(1);
    }
    Ok(0)
}

fn write_estimate(out: &mut dyn Write, name: &str, e: &LipschitzEstimate) -> io::Result<()> {
    writeln!(out, "{name} {}", e.value)?;
    writeln!(out, "{name}_argmax {}", e.argmax)?;
    writeln!(out, "{name}_tolerance {}", e.tolerance)?;
    writeln!(out, "{name}_grid {}", e.grid_size)?;
    writeln!(out, "{name}_range {} {}", e.lo, e.hi)
}

fn estimate(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let model = cfg.model();
    let bound = cfg.search_bound.unwrap_or_else(|| model.domain_bound());
    let eps = cfg.lip_eps(&model);
    let global = model.estimate_global_lipschitz(bound, cfg.grid);
    let local = model.estimate_local_lipschitz(eps, cfg.grid);
    write_estimate(out, "M", &global).map_err(stdout_err)?;
    write_estimate(out, "M_eps", &local).map_err(stdout_err)?;
    writeln!(out, "lip_eps {eps}").map_err(stdout_err)?;
    let report = model.verify_assumptions(cfg.grid);
    for c in &report.clauses {
        let witness = c.counterexample.map_or_else(String::new, |x| format!("\t{x}"));
        writeln!(out, "ASSUMPTION {}\t{}{}", c.name, if c.passed { "PASS" } else { "FAIL" }, witness)
            .map_err(stdout_err)?;
    }
    Ok(0)
}
