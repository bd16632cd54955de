use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use emhd_cli::app::{self, Analysis, SweepAxis};
use emhd_cli::config::SimConfig;
use emhd_cli::verify::{run_verify, Level};
use emhd_core::solver::RunStatus;
use emhd_core::EmhdError;

#[derive(Parser)]
#[command(name = "emhd", version, about = "Generalized electron MHD simulator and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// key = value configuration file; defaults are used when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides such as `--model.s 0.1` or `--stepper.dt=5e-4`
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and store its series and checkpoints
    Run(ConfigArgs),
    /// Run the Picard iteration for one configuration
    Picard(ConfigArgs),
    /// Smallness sweep along one parameter axis
    Sweep {
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values, possibly empty
        #[arg(long, default_value = "", value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<String>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Post-process a run directory
    Analyze { dir: PathBuf, which: Analysis },
    /// Built-in invariant checks
    Verify {
        #[arg(long, default_value = "fast")]
        level: Level,
    },
}

fn exit_code(e: &EmhdError) -> u8 {
    match e {
        EmhdError::BlowUp { .. } => 2,
        EmhdError::Divergence { .. } => 4,
        EmhdError::Config { .. }
        | EmhdError::Parameter(_)
        | EmhdError::Io(_)
        | EmhdError::Format(_)
        | EmhdError::Json(_)
        | EmhdError::Csv(_)
        | EmhdError::InvalidGrid(_) => 3,
        _ => 1,
    }
}

fn fail(e: EmhdError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(&e))
}

fn load(args: &ConfigArgs) -> emhd_core::Result<SimConfig> {
    let mut cfg = match &args.config {
        Some(path) => read_config(path)?,
        None => SimConfig::default(),
    };
    cfg.apply_overrides(&args.overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

fn read_config(path: &Path) -> emhd_core::Result<SimConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| EmhdError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    SimConfig::parse_unvalidated(&text)
}

fn parse_values(raw: &[String]) -> emhd_core::Result<Vec<f64>> {
    raw.iter()
        .map(|v| v.trim())
        .filter(|v| !v.is_empty())
        .map(|v| v.parse().map_err(|_| EmhdError::Parameter(format!("sweep value {v:?} is not a number"))))
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let cfg = match load(&args) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match app::cmd_run(&cfg) {
                Ok(out) => {
                    println!("{}", out.dir.display());
                    match out.status {
                        RunStatus::Completed => ExitCode::SUCCESS,
                        RunStatus::BlowUp { time } => {
                            eprintln!("blow-up at t = {time}");
                            ExitCode::from(2)
                        }
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Picard(args) => {
            let cfg = match load(&args) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match app::cmd_picard(&cfg) {
                Ok(out) => {
                    println!("{}", out.dir.display());
                    for it in &out.trace.iterations {
                        println!("iteration {:>3}  diff {:.6e}  ratio {:.6}", it.index, it.diff_norm, it.ratio);
                    }
                    if out.converged {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("Picard sequence did not contract");
                        ExitCode::from(4)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Sweep { axis, values, cfg } => {
            let run = || -> emhd_core::Result<()> {
                let template = load(&cfg)?;
                let values = parse_values(&values)?;
                let (path, rows) = app::cmd_sweep(&template, axis, &values)?;
                println!("{}", path.display());
                for r in rows {
                    println!("{:>12} {:<22} {}", r.value, r.admissibility, r.verdict);
                }
                Ok(())
            };
            match run() {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Command::Analyze { dir, which } => {
            if !dir.join("config.cfg").is_file() {
                eprintln!("error: {} is not a run directory", dir.display());
                return ExitCode::from(3);
            }
            match app::cmd_analyze(&dir, which) {
                Ok(out) => {
                    print!("{}", out.text);
                    if out.pass == Some(false) {
                        ExitCode::from(1)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Verify { level } => {
            let results = run_verify(level, |r| println!("{r}"));
            let failed = results.iter().filter(|r| !r.pass).count();
            println!("{} checks, {failed} failed", results.len());
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
