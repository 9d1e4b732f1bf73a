use clap::{Parser, Subcommand};
use podsim::config::Scenario;
use podsim::{harness, server};
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "podsim", version, about = "Underwater pod-gripper simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario headless and write telemetry.csv, report.json and config.json.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Pace the simulation to the wall clock.
        #[arg(long)]
        realtime: bool,
    },
    /// Evaluate one model quantity over an evenly spaced range.
    Sweep {
        key: String,
        from: f64,
        to: f64,
        steps: usize,
        scenario: PathBuf,
        /// Write the table here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a live teleoperation session.
    Serve {
        scenario: PathBuf,
        #[arg(long, env = server::PORT_ENV, default_value_t = server::DEFAULT_PORT)]
        port: u16,
        /// Listen on all interfaces instead of loopback.
        #[arg(long)]
        public: bool,
    },
}

fn load(path: &Path) -> Result<Scenario, ExitCode> {
    Scenario::load(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_CONFIG)
    })
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

fn run(command: Command) -> Result<(), ExitCode> {
    match command {
        Command::Run {
            scenario,
            out,
            realtime,
        } => {
            let s = load(&scenario)?;
            let output = harness::run(&s, realtime).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            })?;
            output.write_to(&out).map_err(|e| {
                eprintln!("error: cannot write {}: {e}", out.display());
                ExitCode::FAILURE
            })?;
            let m = &output.report.mission;
            println!(
                "{}: {} after {:.2} s, energy {:.1} J, max depth {:.3} m",
                s.name, m.final_phase, m.duration_s, m.energy_j, m.max_depth_m
            );
            Ok(())
        }
        Command::Sweep {
            key,
            from,
            to,
            steps,
            scenario,
            out,
        } => {
            let s = load(&scenario)?;
            let table = harness::sweep(&key, from, to, steps, &s).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            })?;
            let csv = table.to_csv();
            match out {
                Some(path) => std::fs::write(&path, csv).map_err(|e| {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    ExitCode::FAILURE
                })?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Serve {
            scenario,
            port,
            public,
        } => {
            let s = load(&scenario)?;
            let ip = if public {
                Ipv4Addr::UNSPECIFIED
            } else {
                Ipv4Addr::LOCALHOST
            };
            let addr = SocketAddr::from((ip, port));
            let rt = tokio::runtime::Runtime::new().map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            })?;
            rt.block_on(async move {
                let listener = server::bind(addr).await?;
                eprintln!("podsim: serving {} on ws://{addr}", s.name);
                server::serve(s, listener).await
            })
            .map_err(|e| {
                eprintln!("error: {e}");
                match e {
                    server::ServeError::Sim(e) => ExitCode::from(e.exit_code() as u8),
                    server::ServeError::Bind { .. } => ExitCode::FAILURE,
                }
            })
        }
    }
}
