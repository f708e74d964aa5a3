use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use s3flow_cli::config::{ConfigFile, ExportFormat};
use s3flow_cli::io::{export_mesh, read_raw4};
use s3flow_cli::runner::{run_scenario, RunOptions};

/// Environment variable naming the default output root.
const OUTPUT_ENV: &str = "S3FLOW_OUTPUT";

#[derive(Parser)]
#[command(name = "s3flow", version, about = "Curvature flows of surfaces in S³")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output root; scenario artifacts go to <root>/<scenario>.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Mesh snapshot cadence in steps, overriding the scenario's.
    #[arg(long, global = true)]
    cadence: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a config file.
    Run { config: PathBuf, scenario: String },
    /// List the scenarios in a config file.
    List { config: PathBuf },
    /// Convert a raw4 snapshot to another format.
    Export {
        snapshot: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        path: PathBuf,
    },
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::List { config } => {
            let file = ConfigFile::load(&config)?;
            for s in &file.scenarios {
                println!("{}\t{}", s.name, s.description);
            }
            Ok(0)
        }
        Command::Run { config, scenario } => {
            let file = ConfigFile::load(&config)?;
            let scenario = file.scenario(&scenario)?;
            let root = cli
                .output_dir
                .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("output"));
            let opts = RunOptions {
                export_cadence: cli.cadence,
            };
            let outcome = run_scenario(scenario, &root.join(&scenario.name), &opts)?;
            for (k, v) in &outcome.summary {
                println!("{k} = {v}");
            }
            Ok(outcome.exit_code() as u8)
        }
        Command::Export { snapshot, format, path } => {
            let mesh = read_raw4(&snapshot)?;
            export_mesh(&mesh, None, format, &path)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
