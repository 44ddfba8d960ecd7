//! The `diffdrive` command line.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use diffdrive_core::constants::{CANONICAL_MISMATCH, DRIFT_REVOLUTIONS, RATED_MOTOR_SPEED_RPM, REAL_MOTOR_SPEED_RPM};
use diffdrive_core::drivetrain::{TransmissionConfig, MAX_MISMATCH};
use diffdrive_core::experiments::{pulley_table, run_compensated_drift_experiment, run_drift_experiment, speed_table};
use diffdrive_core::SimConfig;

use crate::config::{ConfigError, ScenarioConfig};
use crate::report::ReportFormat;
use crate::scenario::run_scenario;
use crate::telemetry::{HostOptions, TelemetryHost};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_EXPERIMENT: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "diffdrive", version, about = "Differential screw/spline needle driver simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run every experiment in a scenario file and write the report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Rotate in place with a motor speed mismatch and report the insertion drift.
    Drift {
        /// Relative insertion-motor speed error, |epsilon| < 0.1.
        #[arg(long, default_value_t = CANONICAL_MISMATCH, value_parser = parse_epsilon, allow_hyphen_values = true)]
        epsilon: f64,
        #[arg(long, default_value_t = DRIFT_REVOLUTIONS, value_parser = clap::value_parser!(u32).range(1..))]
        revs: u32,
        /// Enable the PID speed trim.
        #[arg(long)]
        compensated: bool,
        /// Scenario file for the drive and controller settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print nut speeds for every slave pulley.
    Table1 {
        /// Print a single column for this motor speed instead of rated/real.
        #[arg(long, value_parser = parse_rpm)]
        input_rpm: Option<f64>,
    },
    /// Serve the simulator over HTTP/WebSocket.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn parse_epsilon(s: &str) -> Result<f64, String> {
    let eps: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if eps.abs() < MAX_MISMATCH {
        Ok(eps)
    } else {
        Err(format!("must satisfy |epsilon| < {MAX_MISMATCH}"))
    }
}

fn parse_rpm(s: &str) -> Result<f64, String> {
    let rpm: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if rpm.is_finite() && rpm >= 0.0 {
        Ok(rpm)
    } else {
        Err("must be a finite, non-negative speed".to_owned())
    }
}

/// Failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = match e {
            ConfigError::Io { .. } => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("cannot write {}: {e}", path.display()),
    }
}

fn load_sim(config: Option<&Path>) -> Result<SimConfig, Failure> {
    match config {
        Some(path) => Ok(ScenarioConfig::load(path)?.sim_config()?),
        None => Ok(SimConfig::default()),
    }
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                EXIT_USAGE
            } else {
                let _ = write!(out, "{}", e.render());
                EXIT_OK
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: Cmd, out: &mut dyn Write) -> Result<(), Failure> {
    let stdout_failure = |e: std::io::Error| io_failure(Path::new("<stdout>"), e);
    match cmd {
        Cmd::Run { config, out: path, format } => {
            let cfg = ScenarioConfig::load(&config)?;
            let scenario = cfg.validate()?;
            if scenario.experiments.is_empty() {
                return Err(Failure {
                    code: EXIT_CONFIG,
                    message: "invalid value for `experiment`: scenario defines no experiments".into(),
                });
            }
            let report = run_scenario(&scenario, cfg.seed).map_err(|e| Failure {
                code: EXIT_EXPERIMENT,
                message: e.to_string(),
            })?;
            let text = report.render(format.into()).map_err(|e| Failure {
                code: EXIT_EXPERIMENT,
                message: e.to_string(),
            })?;
            std::fs::write(&path, text).map_err(|e| io_failure(&path, e))?;
            writeln!(out, "wrote {} section(s) to {}", report.sections.len(), path.display())
                .map_err(stdout_failure)?;
        }
        Cmd::Drift {
            epsilon,
            revs,
            compensated,
            config,
        } => {
            let sim = load_sim(config.as_deref())?;
            let r = if compensated {
                run_compensated_drift_experiment(revs, epsilon, &sim)
            } else {
                run_drift_experiment(revs, epsilon, &sim)
            }
            .map_err(|e| Failure {
                code: EXIT_EXPERIMENT,
                message: e.to_string(),
            })?;
            writeln!(
                out,
                "revolutions      {revs}\n\
                 epsilon          {epsilon}\n\
                 compensated      {compensated}\n\
                 total_rotation   {:.6} deg\n\
                 insertion_drift  {:.6} mm\n\
                 drift_per_rev    {:.6} mm/rev",
                r.total_rotation, r.insertion_drift, r.drift_per_rev
            )
            .map_err(stdout_failure)?;
        }
        Cmd::Table1 { input_rpm } => write_table1(out, input_rpm).map_err(stdout_failure)?,
        Cmd::Serve { port, host, config } => {
            let sim = load_sim(config.as_deref())?;
            serve(SocketAddr::new(host, port), sim, out)?;
        }
    }
    Ok(())
}

fn write_table1(out: &mut dyn Write, input_rpm: Option<f64>) -> std::io::Result<()> {
    match input_rpm {
        None => {
            writeln!(
                out,
                "{:<16}{:>8}{:>8}{:>8}{:>12}{:>12}",
                "pulley", "master", "slave", "ratio", "rated_rpm", "real_rpm"
            )?;
            for row in pulley_table(RATED_MOTOR_SPEED_RPM, REAL_MOTOR_SPEED_RPM) {
                writeln!(
                    out,
                    "{:<16}{:>8}{:>8}{:>8}{:>12}{:>12}",
                    row.name,
                    row.config.master_teeth(),
                    row.config.slave_teeth(),
                    row.config.ratio(),
                    row.rated,
                    row.real
                )?;
            }
        }
        Some(rpm) => {
            let configs = TransmissionConfig::all_slave_pulleys();
            writeln!(out, "{:<16}{:>8}{:>8}{:>8}{:>12}", "pulley", "master", "slave", "ratio", "nut_rpm")?;
            for (cfg, speed) in configs.iter().zip(speed_table(rpm, &configs)) {
                writeln!(
                    out,
                    "{:<16}{:>8}{:>8}{:>8}{:>12}",
                    cfg.name().unwrap_or("custom"),
                    cfg.master_teeth(),
                    cfg.slave_teeth(),
                    cfg.ratio(),
                    speed
                )?;
            }
        }
    }
    Ok(())
}

fn serve(addr: SocketAddr, sim: SimConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure {
        code: EXIT_IO,
        message: format!("cannot start runtime: {e}"),
    })?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| Failure {
            code: EXIT_IO,
            message: format!("cannot bind {addr}: {e}"),
        })?;
        let bound = listener.local_addr().unwrap_or(addr);
        let host = TelemetryHost::spawn(sim, HostOptions::realtime(&sim)).map_err(|e| Failure {
            code: EXIT_CONFIG,
            message: e.to_string(),
        })?;
        let _ = writeln!(out, "listening on http://{bound}");
        let _ = out.flush();
        tokio::select! {
            r = crate::telemetry::serve(listener, Arc::new(host)) => r.map_err(|e| Failure {
                code: EXIT_IO,
                message: format!("server failed: {e}"),
            }),
            _ = tokio::signal::ctrl_c() => Ok(()),
        }
    })
}
