//! Command-line driver for the photon-pair simulator: configuration
//! ingestion, run orchestration across the three solvers, deterministic
//! artifact emission, and parameter sweeps.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cavity_epr::analytic::{analytic_branch_traces, analytic_timeseries};
use cavity_epr::checks::run_invariant_suite;
use cavity_epr::dynamics::Params;
use cavity_epr::effective::{integrate_effective, EffectiveRun};
use cavity_epr::entanglement::{fidelity_epr, pair_from_branches, BranchTrace};
use cavity_epr::master::integrate_master;
use cavity_epr::series::{local_maxima, TimeSeries};

use config::{build_config, parse_override, validate_sweep, RunConfig, SolverChoice, SweepSpec};
use output::{summary_json, sweep_csv, timeseries_csv, Summary, SweepRow, PHYSICAL_UNITS_NOTE};

#[derive(Parser)]
#[command(
    name = "cavity-epr",
    version,
    about = "Simulates deterministic emission of a polarization-entangled photon pair \
             from a single three-level-manifold atom crossing a two-mode optical cavity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file: flat `key = value` lines (# comments) or a JSON object.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Integrators to run; sweeps fall back to the analytic solver for `all`.
    #[arg(long, global = true, value_enum)]
    solver: Option<SolverChoice>,

    /// Directory that receives the emitted artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Single-key configuration override; repeatable (e.g. --param kappa=2.4).
    #[arg(long = "param", global = true, value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured model and write time series plus a summary.
    Run,
    /// Sweep one parameter over a linear range and write a metrics table.
    Sweep {
        /// Parameter to vary (a real-valued model field, e.g. kappa).
        #[arg(long)]
        parameter: Option<String>,
        /// Lower end of the inclusive sweep range.
        #[arg(long)]
        min: Option<f64>,
        /// Upper end of the inclusive sweep range.
        #[arg(long)]
        max: Option<f64>,
        /// Number of evenly spaced sweep points.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Run the structural invariant suite and print one line per check.
    Check,
}

enum CliError {
    /// Bad configuration or an unusable environment; exit code 1.
    Config(Vec<String>),
    /// A solver diverged or a derived quantity is undefined; exit code 2.
    Numerical(String),
    /// Invariant checks failed; exit code 2.
    ChecksFailed(usize),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msgs)) => {
            for m in &msgs {
                eprintln!("config error: {m}");
            }
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::ChecksFailed(n)) => {
            eprintln!("{n} invariant check(s) failed");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Run => do_run(&cfg),
        Command::Sweep {
            parameter,
            min,
            max,
            steps,
        } => {
            let spec = resolve_sweep(&cfg, parameter.clone(), *min, *max, *steps)?;
            do_sweep(&cfg, &spec)
        }
        Command::Check => do_check(&cfg),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let text =
        match &cli.config {
            Some(path) => Some(std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(vec![format!("cannot read {}: {e}", path.display())])
            })?),
            None => None,
        };
    let mut overrides = Vec::new();
    let mut errors = Vec::new();
    for s in &cli.params {
        match parse_override(s) {
            Ok(kv) => overrides.push(kv),
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    let mut cfg = build_config(text.as_deref(), &overrides).map_err(CliError::Config)?;
    if let Some(s) = cli.solver {
        cfg.solver = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

/// Merge sweep settings: command-line flags win over the config file.
fn resolve_sweep(
    cfg: &RunConfig,
    parameter: Option<String>,
    min: Option<f64>,
    max: Option<f64>,
    steps: Option<usize>,
) -> Result<SweepSpec, CliError> {
    let base = cfg.sweep.clone();
    let spec = SweepSpec {
        parameter: parameter
            .or_else(|| base.as_ref().map(|b| b.parameter.clone()))
            .unwrap_or_default(),
        min: min.or(base.as_ref().map(|b| b.min)).unwrap_or(f64::NAN),
        max: max.or(base.as_ref().map(|b| b.max)).unwrap_or(f64::NAN),
        steps: steps.or(base.as_ref().map(|b| b.steps)).unwrap_or(0),
    };
    let mut errors = Vec::new();
    if spec.parameter.is_empty() {
        errors.push("sweep: no parameter given (use --parameter or sweep_parameter)".into());
    }
    validate_sweep(&spec, &mut errors);
    if errors.is_empty() {
        Ok(spec)
    } else {
        Err(CliError::Config(errors))
    }
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliError::Config(vec![format!("cannot write {}: {e}", path.display())]))
}

fn numerical(context: &str, e: cavity_epr::Error) -> CliError {
    CliError::Numerical(format!("{context}: {e}"))
}

fn do_run(cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| {
        CliError::Config(vec![format!(
            "cannot create {}: {e}",
            cfg.output_dir.display()
        )])
    })?;
    let p = &cfg.params;

    let mut master_series: Option<TimeSeries> = None;
    if cfg.solver.runs_master() {
        let run = integrate_master(p).map_err(|e| numerical("master solver", e))?;
        if cfg.emit_timeseries {
            write_artifact(
                &cfg.output_dir,
                "timeseries.csv",
                &timeseries_csv(&run.series),
            )?;
        }
        master_series = Some(run.series);
    }

    let mut effective_run: Option<EffectiveRun> = None;
    if cfg.solver.runs_effective() {
        let run = integrate_effective(p).map_err(|e| numerical("effective solver", e))?;
        if cfg.emit_timeseries {
            write_artifact(
                &cfg.output_dir,
                "timeseries_effective.csv",
                &timeseries_csv(&run.series),
            )?;
        }
        effective_run = Some(run);
    }

    let mut analytic_series: Option<TimeSeries> = None;
    if cfg.solver.runs_analytic() {
        let series = analytic_timeseries(p).map_err(|e| numerical("analytic solver", e))?;
        if cfg.emit_timeseries {
            write_artifact(
                &cfg.output_dir,
                "timeseries_analytic.csv",
                &timeseries_csv(&series),
            )?;
        }
        analytic_series = Some(series);
    }

    if cfg.emit_summary {
        let summary = build_summary(
            p,
            master_series.as_ref(),
            effective_run.as_ref(),
            analytic_series.as_ref(),
        )?;
        write_artifact(&cfg.output_dir, "summary.json", &summary_json(&summary))?;
    }
    Ok(())
}

/// Assemble the headline metrics. P1/P2 and peak times come from the highest-
/// fidelity series that ran (master, then effective, then analytic);
/// `max_trace_err` is the master's |tr rho - 1| (zero when it did not run);
/// the EPR fidelity always comes from the pure-state branch pipeline.
fn build_summary(
    p: &Params,
    master: Option<&TimeSeries>,
    effective: Option<&EffectiveRun>,
    analytic: Option<&TimeSeries>,
) -> Result<Summary, CliError> {
    let primary: &TimeSeries = master
        .or_else(|| effective.map(|r| &r.series))
        .or(analytic)
        .expect("at least one solver runs");

    let p1 = primary.cum_total_at(p.t1);
    let p2 = primary.cum_total_at(p.t_final) - p1;
    let peaks = local_maxima(&primary.times, &primary.p_l, 0.05);

    let fidelity = match effective {
        Some(run) => branch_fidelity(&run.branch_r_first, &run.branch_l_first)?,
        None => {
            let (r_first, l_first) =
                analytic_branch_traces(p).map_err(|e| numerical("pair-state pipeline", e))?;
            branch_fidelity(&r_first, &l_first)?
        }
    };

    let max_trace_err = master
        .map(|s| s.trace_err.iter().cloned().fold(0.0, f64::max))
        .unwrap_or(0.0);

    let mut series_ran: Vec<&TimeSeries> = Vec::new();
    if let Some(s) = master {
        series_ran.push(s);
    }
    if let Some(r) = effective {
        series_ran.push(&r.series);
    }
    if let Some(s) = analytic {
        series_ran.push(s);
    }
    let mut cross = 0.0f64;
    for i in 0..series_ran.len() {
        for j in (i + 1)..series_ran.len() {
            cross = cross.max(series_ran[i].max_abs_dev(series_ran[j], false));
        }
    }

    Ok(Summary {
        p1,
        p2,
        fidelity_epr: fidelity,
        peak_t_first: peaks.first().map(|x| x.0),
        peak_t_second: peaks.get(1).map(|x| x.0),
        max_trace_err,
        cross_solver_max_dev: cross,
        physical_units_note: PHYSICAL_UNITS_NOTE.to_string(),
    })
}

fn branch_fidelity(r_first: &BranchTrace, l_first: &BranchTrace) -> Result<f64, CliError> {
    let (state, _overlap) =
        pair_from_branches(r_first, l_first).map_err(|e| numerical("pair-state pipeline", e))?;
    fidelity_epr(&state).map_err(|e| numerical("pair-state pipeline", e))
}

fn do_sweep(cfg: &RunConfig, spec: &SweepSpec) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| {
        CliError::Config(vec![format!(
            "cannot create {}: {e}",
            cfg.output_dir.display()
        )])
    })?;

    // Validate every sweep point before integrating any of them.
    let values = spec.values();
    let mut points = Vec::with_capacity(values.len());
    for &v in &values {
        let mut p = cfg.params.clone();
        config::set_sweep_param(&mut p, &spec.parameter, v)
            .map_err(|e| CliError::Config(vec![e]))?;
        if let Err(violations) = p.validate() {
            return Err(CliError::Config(
                violations
                    .into_iter()
                    .map(|m| format!("sweep {} = {v}: {m}", spec.parameter))
                    .collect(),
            ));
        }
        points.push((v, p));
    }

    // `all` makes no sense point-by-point; sweeps then use the closed forms.
    let solver = match cfg.solver {
        SolverChoice::All => SolverChoice::Analytic,
        s => s,
    };

    let mut rows = Vec::with_capacity(points.len());
    for (v, p) in &points {
        let series = match solver {
            SolverChoice::Master => {
                integrate_master(p)
                    .map_err(|e| {
                        numerical(&format!("master solver at {} = {v}", spec.parameter), e)
                    })?
                    .series
            }
            SolverChoice::Effective => {
                integrate_effective(p)
                    .map_err(|e| {
                        numerical(&format!("effective solver at {} = {v}", spec.parameter), e)
                    })?
                    .series
            }
            SolverChoice::Analytic | SolverChoice::All => analytic_timeseries(p).map_err(|e| {
                numerical(&format!("analytic solver at {} = {v}", spec.parameter), e)
            })?,
        };
        let p1 = series.cum_total_at(p.t1);
        let p2 = series.cum_total_at(p.t_final) - p1;
        rows.push(SweepRow {
            param: spec.parameter.clone(),
            value: *v,
            p1,
            p2,
            t_p1_90: series.crossing_time(0.9).unwrap_or(f64::NAN),
        });
    }

    write_artifact(&cfg.output_dir, "sweep.csv", &sweep_csv(&rows))
}

fn do_check(cfg: &RunConfig) -> Result<(), CliError> {
    let outcomes = run_invariant_suite(&cfg.params).map_err(|e| numerical("invariant suite", e))?;
    let mut failed = 0usize;
    for o in &outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag}  {:<22} {}", o.name, o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        Err(CliError::ChecksFailed(failed))
    } else {
        Ok(())
    }
}
