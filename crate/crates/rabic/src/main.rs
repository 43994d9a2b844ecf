//! Command-line laboratory for the adaptive backstepping impedance
//! controller: single runs, PD-vs-rabic comparisons, parameter sweeps,
//! invariant checks, and preset management.
//!
//! Exit codes: 0 on success, 1 on configuration/usage errors or failed
//! checks, 2 when a simulation aborts numerically (a partial log is still
//! written).
//!
//! The default output directory comes from the `RABIC_OUT_DIR` environment
//! variable when `--out` is not given (falling back to `./out`).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use rabic::config::{preset_names, preset_toml, Config};
use rabic::metrics::{compare_runs, compute_metrics};
use rabic::simulation::{run_scenario, write_atomic, ControllerKind, RunOutcome};

#[derive(Parser)]
#[command(
    name = "rabic",
    about = "Numerical laboratory for robust adaptive backstepping impedance control",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ControllerArg {
    Pd,
    Rabic,
}

impl From<ControllerArg> for ControllerKind {
    fn from(v: ControllerArg) -> Self {
        match v {
            ControllerArg::Pd => ControllerKind::Pd,
            ControllerArg::Rabic => ControllerKind::Rabic,
        }
    }
}

#[derive(Args)]
struct CommonRunArgs {
    /// Config file path, or the name of an embedded preset.
    #[arg(long)]
    config: String,
    /// Output directory (default: $RABIC_OUT_DIR, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the random seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the integration step (seconds).
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop simulation and write the log plus metrics.
    Run {
        #[command(flatten)]
        common: CommonRunArgs,
        /// Override the controller selected in the config.
        #[arg(long, value_enum)]
        controller: Option<ControllerArg>,
    },
    /// Run the same scenario under PD and under the adaptive impedance
    /// controller and write a side-by-side report.
    Compare {
        #[command(flatten)]
        common: CommonRunArgs,
    },
    /// Re-run one scenario over a list of values of one parameter.
    Sweep {
        #[command(flatten)]
        common: CommonRunArgs,
        /// Dotted parameter path inside the config (e.g. controller.rabic.l).
        #[arg(long)]
        param: String,
        /// Comma-separated list of values to sweep over.
        #[arg(long)]
        values: String,
        /// Override the controller selected in the config.
        #[arg(long, value_enum)]
        controller: Option<ControllerArg>,
    },
    /// Run the fast invariant suite and report pass/fail per item.
    Check {
        /// Flip the lemma directions: the suite must then fail, proving it
        /// can detect violations.
        #[arg(long)]
        self_test: bool,
    },
    /// List the embedded presets, or write them out as TOML files.
    Presets {
        /// Directory to write the preset files into.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(arg: &Option<PathBuf>) -> PathBuf {
    arg.clone()
        .or_else(|| std::env::var_os("RABIC_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load_config(common: &CommonRunArgs) -> rabic::Result<Config> {
    let mut cfg = Config::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.sim.seed = seed;
    }
    if let Some(dt) = common.dt {
        cfg.sim.dt = dt;
    }
    Ok(cfg)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> rabic::Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| rabic::Error::Config(format!("JSON serialization failed: {e}")))?;
    write_atomic(path, text.as_bytes())
}

fn cmd_run(common: &CommonRunArgs, controller: Option<ControllerArg>) -> rabic::Result<ExitCode> {
    let cfg = load_config(common)?;
    let scenario = cfg.build_scenario(controller.map(Into::into))?;
    let kind = scenario.controller.as_str();
    let dir = out_dir(&common.out);
    let outcome = run_scenario(&scenario)?;
    let log_path = dir.join(format!("run-{kind}.csv"));
    outcome.log().write_csv(&log_path)?;
    match &outcome {
        RunOutcome::Completed { log } => {
            let metrics = compute_metrics(log)?;
            write_json(&dir.join(format!("metrics-{kind}.json")), &metrics)?;
            println!(
                "run ({kind}): {} samples, peak force {:.4} N, inner RMSE {:.6}, outer RMSE {:.6}",
                log.rows.len(),
                metrics.peak_force,
                metrics.inner_rmse,
                metrics.outer_rmse
            );
            println!("log: {}", log_path.display());
            Ok(ExitCode::SUCCESS)
        }
        RunOutcome::Aborted { t, what, .. } => {
            eprintln!("run aborted at t = {t:.4}: {what} (partial log written to {})", log_path.display());
            Ok(ExitCode::from(2))
        }
    }
}

fn cmd_compare(common: &CommonRunArgs) -> rabic::Result<ExitCode> {
    let cfg = load_config(common)?;
    let dir = out_dir(&common.out);
    let mut logs = Vec::new();
    for kind in [ControllerKind::Pd, ControllerKind::Rabic] {
        let scenario = cfg.build_scenario(Some(kind))?;
        let outcome = run_scenario(&scenario)?;
        let log_path = dir.join(format!("run-{}.csv", kind.as_str()));
        outcome.log().write_csv(&log_path)?;
        match outcome {
            RunOutcome::Completed { log } => logs.push(log),
            RunOutcome::Aborted { t, what, .. } => {
                eprintln!(
                    "{} run aborted at t = {t:.4}: {what} (partial log written to {})",
                    kind.as_str(),
                    log_path.display()
                );
                return Ok(ExitCode::from(2));
            }
        }
    }
    let report = compare_runs(&logs[0], &logs[1])?;
    write_json(&dir.join("compare.json"), &report)?;
    println!(
        "terminal mean force: pd {:.4} N, rabic {:.4} N (ratio {:.4})",
        report.pd.terminal_mean_force, report.rabic.terminal_mean_force, report.terminal_force_ratio
    );
    println!(
        "force decreasing over final second: pd {}, rabic {}",
        report.pd_force_decreasing_final_second, report.rabic_force_decreasing_final_second
    );
    println!("report: {}", dir.join("compare.json").display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(
    common: &CommonRunArgs,
    param: &str,
    values: &str,
    controller: Option<ControllerArg>,
) -> rabic::Result<ExitCode> {
    let cfg = load_config(common)?;
    let dir = out_dir(&common.out);
    let parsed: Vec<f64> = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| rabic::Error::Config(format!("sweep value '{v}' is not a number")))
        })
        .collect::<rabic::Result<_>>()?;
    if parsed.is_empty() {
        return Err(rabic::Error::Config("sweep needs at least one value".into()));
    }
    // Validate the path once up front for a clean error message.
    cfg.set_param(param, parsed[0])?;
    let kind = controller.map(ControllerKind::from);

    let results: Vec<rabic::Result<(f64, Option<rabic::metrics::Metrics>)>> = parsed
        .par_iter()
        .map(|&value| {
            let cfg_v = cfg.set_param(param, value)?;
            let scenario = cfg_v.build_scenario(kind)?;
            match run_scenario(&scenario)? {
                RunOutcome::Completed { log } => Ok((value, Some(compute_metrics(&log)?))),
                RunOutcome::Aborted { .. } => Ok((value, None)),
            }
        })
        .collect();

    let mut csv = String::from(
        "value,completed,peak_force,terminal_mean_force,inner_rmse,outer_rmse,rms_torque_rate,max_abs_torque\n",
    );
    let mut any_abort = false;
    for r in results {
        let (value, metrics) = r?;
        match metrics {
            Some(m) => {
                csv.push_str(&format!(
                    "{},1,{},{},{},{},{},{}\n",
                    value,
                    m.peak_force,
                    m.terminal_mean_force,
                    m.inner_rmse,
                    m.outer_rmse,
                    m.rms_torque_rate,
                    m.max_abs_torque
                ));
            }
            None => {
                any_abort = true;
                csv.push_str(&format!("{value},0,,,,,,\n"));
            }
        }
    }
    let path = dir.join("sweep.csv");
    write_atomic(&path, csv.as_bytes())?;
    println!("sweep over {param}: {} values, results in {}", parsed.len(), path.display());
    if any_abort {
        eprintln!("one or more sweep points aborted numerically");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(self_test: bool) -> rabic::Result<ExitCode> {
    let report = rabic::check::run_check(self_test)?;
    print!("{}", report.render());
    if self_test {
        // The flipped suite must fail; success of the self-test means the
        // checker detected the planted violations.
        if report.all_passed() {
            eprintln!("self-test FAILED: flipped inequalities were not detected");
            return Ok(ExitCode::from(1));
        }
        println!("self-test OK: flipped inequalities were detected as failures");
        return Ok(ExitCode::SUCCESS);
    }
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_presets(out: &Option<PathBuf>) -> rabic::Result<ExitCode> {
    match out {
        None => {
            for name in preset_names() {
                println!("{name}");
            }
        }
        Some(dir) => {
            for name in preset_names() {
                let path = dir.join(format!("{name}.toml"));
                write_atomic(&path, preset_toml(name).unwrap().as_bytes())?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help/version requests are successes; everything else is a
            // usage error.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match &cli.command {
        Command::Run { common, controller } => cmd_run(common, *controller),
        Command::Compare { common } => cmd_compare(common),
        Command::Sweep {
            common,
            param,
            values,
            controller,
        } => cmd_sweep(common, param, values, *controller),
        Command::Check { self_test } => cmd_check(*self_test),
        Command::Presets { out } => cmd_presets(out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
