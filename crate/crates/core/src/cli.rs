//! Commands behind the `droopsim` binary.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 a run that did not
//! settle (non-settling or infeasible) or a fixture mismatch, 3 no feasible
//! damping value.
//!
//! The commands write to caller-supplied streams so they can be driven from
//! tests without spawning a process.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::engine::{self, RunStatus};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::metrics::summarize;
use crate::report;
use crate::sizing;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_SETTLED: i32 = 2;
pub const EXIT_NO_FEASIBLE: i32 = 3;

/// Default location of the golden fixtures.
pub const DEFAULT_FIXTURE_DIR: &str = "fixtures";

#[derive(Debug, Parser)]
#[command(name = "droopsim", version, about = "PV + battery microgrid droop-damping simulator")]
pub struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Dotted override `section.key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Worker threads for sweeps; all cores when omitted.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one load step at `droop.k_d`.
    Run,
    /// Simulate every value of `sweep.k_d_grid` and tabulate.
    Sweep,
    /// Sweep `sweep.sizing_grid`, screen against constraints and rate the battery.
    Size,
    /// Print the effective configuration as TOML.
    Config,
    /// Golden regression fixtures.
    Fixtures {
        #[command(subcommand)]
        action: FixtureAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum FixtureAction {
    /// Re-run every fixture and compare against its expected summary.
    Verify {
        #[arg(long, default_value = DEFAULT_FIXTURE_DIR)]
        dir: PathBuf,
    },
    /// Overwrite expected summaries from the pinned configs.
    Regenerate {
        #[arg(long, default_value = DEFAULT_FIXTURE_DIR)]
        dir: PathBuf,
    },
}

/// Parses `args` (program name first) and dispatches.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(&cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            code
        }
    }
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Run => load(cli).and_then(|(c, dir)| cmd_run(&c, &dir, out)),
        Command::Sweep => load(cli).and_then(|(c, dir)| cmd_sweep(&c, &dir, cli.jobs, out)),
        Command::Size => load(cli).and_then(|(c, dir)| cmd_size(&c, &dir, cli.jobs, out)),
        Command::Config => load(cli).and_then(|(c, _)| {
            out.write_all(c.to_toml().as_bytes())?;
            Ok(EXIT_OK)
        }),
        Command::Fixtures { action } => match action {
            FixtureAction::Verify { dir } => cmd_fixtures_verify(dir, &cli.set, cli.jobs, out),
            FixtureAction::Regenerate { dir } => cmd_fixtures_regenerate(dir, cli.jobs, out),
        },
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Exit code for an error that aborted a command.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::InvalidParams(_) | Error::Io(_) => EXIT_CONFIG,
        Error::NoFeasiblePoint => EXIT_NO_FEASIBLE,
        _ => EXIT_NOT_SETTLED,
    }
}

fn load(cli: &Cli) -> Result<(Config, PathBuf)> {
    let config = Config::load(cli.config.as_deref(), &cli.set)?;
    let dir = cli.out.clone().unwrap_or_else(|| config.output.dir.clone());
    Ok((config, dir))
}

fn create_file(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

/// One run at `config.droop.k_d`; writes its time series and prints a metrics line.
pub fn cmd_run(config: &Config, out_dir: &Path, out: &mut dyn Write) -> Result<i32> {
    let result = engine::run(&config.scenario, &config.models())?;
    ensure_dir(out_dir)?;
    let path = out_dir.join(report::timeseries_file_name(result.k_d));
    report::write_timeseries(create_file(&path)?, &result.records)?;
    let m = summarize(&result, &config.scenario, config.droop.f_base, &config.metrics);
    writeln!(out, "{}", report::metrics_line(&m))?;
    if let RunStatus::Infeasible { reason, t } = &result.status {
        writeln!(out, "infeasible at t={t}s: {reason}")?;
    }
    Ok(if result.status.is_settled() { EXIT_OK } else { EXIT_NOT_SETTLED })
}

/// Runs `sweep.k_d_grid`; writes per-run series, `summary.csv` and `summary.txt`.
pub fn cmd_sweep(config: &Config, out_dir: &Path, jobs: Option<usize>, out: &mut dyn Write) -> Result<i32> {
    let grid = &config.sweep.k_d_grid;
    let results = sizing::run_grid(grid, &config.scenario, &config.models(), jobs)?;
    ensure_dir(out_dir)?;
    let mut rows = Vec::with_capacity(results.len());
    for r in &results {
        if config.output.write_timeseries {
            let path = out_dir.join(report::timeseries_file_name(r.k_d));
            report::write_timeseries(create_file(&path)?, &r.records)?;
        }
        rows.push(summarize(r, &config.scenario, config.droop.f_base, &config.metrics));
    }
    report::write_summary(create_file(&out_dir.join("summary.csv"))?, &rows)?;
    let table = report::format_table(&rows);
    fs::write(out_dir.join("summary.txt"), &table)?;
    out.write_all(table.as_bytes())?;
    Ok(EXIT_OK)
}

/// Sizing sweep over `sweep.sizing_grid`; writes `sizing_report.csv` and `recommendation.csv`.
pub fn cmd_size(config: &Config, out_dir: &Path, jobs: Option<usize>, out: &mut dyn Write) -> Result<i32> {
    let report = sizing::sweep(
        &config.sweep.sizing_grid,
        &config.scenario,
        &config.models(),
        &config.metrics,
        &config.constraints,
        jobs,
    )?;
    ensure_dir(out_dir)?;
    report::write_sizing_report(create_file(&out_dir.join("sizing_report.csv"))?, &report)?;
    report::write_recommendation(create_file(&out_dir.join("recommendation.csv"))?, &report)?;
    let text = report::format_sizing(&report);
    fs::write(out_dir.join("sizing_report.txt"), &text)?;
    out.write_all(text.as_bytes())?;
    Ok(match report.recommendation() {
        Ok(_) => EXIT_OK,
        Err(_) => EXIT_NO_FEASIBLE,
    })
}

pub fn cmd_fixtures_verify(dir: &Path, overrides: &[String], jobs: Option<usize>, out: &mut dyn Write) -> Result<i32> {
    let report = fixtures::verify_fixtures(dir, overrides, jobs);
    write!(out, "{report}")?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_NOT_SETTLED })
}

pub fn cmd_fixtures_regenerate(dir: &Path, jobs: Option<usize>, out: &mut dyn Write) -> Result<i32> {
    for name in fixtures::regenerate_all(dir, jobs)? {
        writeln!(out, "regenerated {name}")?;
    }
    Ok(EXIT_OK)
}
