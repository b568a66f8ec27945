use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use tumorsim::cli_io::{output, snapshot, RunConfig, Setup};
use tumorsim::diagnostics::{refine_study, Axis};
use tumorsim::stepper::run;

/// Three-phase tumor growth simulator.
#[derive(Debug, Parser)]
#[command(name = "tumorsim", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Check the model hypotheses for a configuration.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Integrate one configuration and write diagnostics and snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run even if hypothesis checks fail.
        #[arg(long)]
        force: bool,
    },
    /// Run a refinement sweep over one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = ["eps", "m", "dt"])]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
}

const EXIT_INVALID: u8 = 1;
const EXIT_ABORT: u8 = 2;

fn load(config: &Path) -> Result<(RunConfig, Setup), ExitCode> {
    let cfg = RunConfig::from_path(config).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_INVALID)
    })?;
    let setup = cfg.build().map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_INVALID)
    })?;
    Ok((cfg, setup))
}

/// Prints the hypothesis report; true when every clause passed.
fn check(cfg: &RunConfig, setup: &Setup) -> bool {
    let rep = setup.model.validate_hypotheses(&setup.initial, cfg.delta, cfg.t_end);
    print!("{rep}");
    rep.all_passed()
}

fn io_fail(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_ABORT)
}

fn cmd_validate(config: &Path) -> ExitCode {
    let (cfg, setup) = match load(config) {
        Ok(v) => v,
        Err(code) => return code,
    };
    if check(&cfg, &setup) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INVALID)
    }
}

fn cmd_run(config: &Path, out: Option<PathBuf>, force: bool) -> ExitCode {
    let (mut cfg, setup) = match load(config) {
        Ok(v) => v,
        Err(code) => return code,
    };
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    if !check(&cfg, &setup) && !force {
        eprintln!("hypothesis checks failed; use --force to run anyway");
        return ExitCode::from(EXIT_INVALID);
    }
    if let Err(e) = std::fs::create_dir_all(&cfg.output_dir) {
        return io_fail(e);
    }
    if let Err(e) = std::fs::write(cfg.output_dir.join("config.ini"), cfg.emit()) {
        return io_fail(e);
    }
    let traj = match run(&setup.model, &setup.initial, &setup.scheme) {
        Ok(t) => t,
        Err(e) => {
            let at = e.step().map(|s| format!(" at step {s}")).unwrap_or_default();
            eprintln!("runtime abort{at}: {e}");
            return ExitCode::from(EXIT_ABORT);
        }
    };
    let records: Vec<_> = traj.samples.iter().map(|s| s.diag).collect();
    if let Err(e) = std::fs::write(cfg.output_dir.join("diagnostics.csv"), output::diagnostics_csv(&records)) {
        return io_fail(e);
    }
    if cfg.snapshot_every > 0 {
        let last = traj.samples.len() - 1;
        for (i, s) in traj.samples.iter().enumerate() {
            if i % cfg.snapshot_every != 0 && i != last {
                continue;
            }
            let step = (s.state.t / cfg.dt).round() as u64;
            let prefix = cfg.output_dir.join(format!("snap_{step:06}"));
            if let Err(e) = snapshot::write_state(&prefix, &setup.model.basis, &s.state) {
                return io_fail(e);
            }
        }
    }
    let max_mass = records.iter().map(|r| r.mass_err).fold(0.0_f64, f64::max);
    let max_dist = records.iter().map(|r| r.dist_theta_l2).fold(0.0_f64, f64::max);
    println!(
        "completed {} steps to t = {}; max mass error {max_mass:.3e}; max dist_theta_L2 {max_dist:.3e}; implicit Yosida solves {}; max condition {:.3e}",
        traj.stats.steps,
        traj.last().state.t,
        traj.stats.newton_solves,
        traj.stats.max_condition
    );
    info!("outputs written to {}", cfg.output_dir.display());
    ExitCode::SUCCESS
}

fn cmd_sweep(config: &Path, axis: &str, values: &[f64], out: Option<PathBuf>, force: bool) -> ExitCode {
    let (mut cfg, setup) = match load(config) {
        Ok(v) => v,
        Err(code) => return code,
    };
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    let axis = Axis::parse(axis).expect("clap restricts the axis names");
    if !check(&cfg, &setup) && !force {
        eprintln!("hypothesis checks failed; use --force to run anyway");
        return ExitCode::from(EXIT_INVALID);
    }
    let report = match refine_study(&cfg, axis, values) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cfg.output_dir) {
        return io_fail(e);
    }
    let summary = output::sweep_csv(&report);
    if let Err(e) = std::fs::write(cfg.output_dir.join("sweep_summary.csv"), &summary) {
        return io_fail(e);
    }
    for (i, r) in report.runs.iter().enumerate() {
        if let Ok(o) = &r.outcome {
            let path = cfg.output_dir.join(format!("diag_{}_{i}.csv", axis.name()));
            if let Err(e) = std::fs::write(path, output::diagnostics_csv(&o.records)) {
                return io_fail(e);
            }
        }
    }
    print!("{summary}");
    if report.all_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ABORT)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.cmd {
        Cmd::Validate { config } => cmd_validate(&config),
        Cmd::Run { config, out, force } => cmd_run(&config, out, force),
        Cmd::Sweep {
            config,
            axis,
            values,
            out,
            force,
        } => cmd_sweep(&config, &axis, &values, out, force),
    }
}
