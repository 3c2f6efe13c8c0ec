use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use helmdd_core::scenario::{self, plot, Composition, ScenarioConfig};
use helmdd_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "helmdd", version, about = "GMRES / Schwarz / deflation experiments on cavity Helmholtz problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its CSV outputs and manifest.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare second-level compositions on one mesh and decomposition.
    Sweep {
        config: PathBuf,
        /// Semicolon-separated `n_cs,n_def` pairs, e.g. "144,0;0,144;136,8".
        #[arg(long)]
        compositions: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write A, b (and Z for deflated variants) in Matrix Market format.
    ExportMatrix {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render SVG plots for a finished run directory.
    Plot { run_dir: PathBuf },
}

fn load(config: &Path, out: Option<PathBuf>) -> Result<ScenarioConfig, Error> {
    let mut cfg = ScenarioConfig::from_file(config).map_err(|e| match e {
        Error::Io { .. } => Error::Config(e.to_string()),
        e => e,
    })?;
    if let Some(dir) = out {
        cfg.output_dir = dir;
    }
    Ok(cfg)
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    if e.is_config() {
        ExitCode::from(EXIT_CONFIG)
    } else {
        ExitCode::from(EXIT_NUMERICAL)
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = load(&config, out)?;
            let (manifest, _) = scenario::run_scenario_config(&cfg)?;
            let dir = cfg.output_dir.display();
            match (&manifest.error, manifest.error_kind.as_deref()) {
                (None, _) => {
                    println!(
                        "N = {}, iterations = {}, converged = {}, plateaus = {:?}",
                        manifest.num_dofs.unwrap_or(0),
                        manifest.iterations.unwrap_or(0),
                        manifest.converged.unwrap_or(false),
                        manifest.plateaus
                    );
                    for note in &manifest.notes {
                        println!("note: {note}");
                    }
                    println!("outputs in {dir}");
                    Ok(ExitCode::SUCCESS)
                }
                (Some(msg), kind) => {
                    eprintln!("error: {msg} (manifest in {dir})");
                    Ok(ExitCode::from(if kind == Some("config") { EXIT_CONFIG } else { EXIT_NUMERICAL }))
                }
            }
        }
        Command::Sweep {
            config,
            compositions,
            out,
        } => {
            let cfg = load(&config, out)?;
            let comps = Composition::parse_list(&compositions)?;
            if comps.is_empty() {
                return Err(Error::Config("no compositions given".into()));
            }
            let rows = scenario::run_table_sweep(&cfg, &comps)?;
            print!("{}", scenario::sweep_csv(&rows));
            Ok(if rows.iter().any(|r| r.error.is_some()) {
                ExitCode::from(EXIT_NUMERICAL)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::ExportMatrix { config, out } => {
            let cfg = load(&config, out)?;
            for p in scenario::export_matrices(&cfg)? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Plot { run_dir } => {
            for p in plot::plot_run(&run_dir)? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => exit_for(&e),
    }
}
