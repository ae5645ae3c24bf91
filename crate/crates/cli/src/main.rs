use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use ctlab_cli::{render_catalog, run_file, RunOptions};

#[derive(Parser)]
#[command(name = "ctlab", version, about = "Continuity-equation laboratory runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Worker threads (overrides the config).
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory (overrides the config).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Root seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the registered measures, densities, fields, test functions and reactions.
    ListCatalog,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListCatalog => {
            print!("{}", render_catalog());
            ExitCode::SUCCESS
        }
        Command::Run { config, workers, output, seed } => {
            let opts = RunOptions { workers, output, seed };
            match run_file(&config, &opts).with_context(|| format!("running {}", config.display())) {
                Ok(summary) => {
                    print!("{}", summary.report.to_text());
                    let m = &summary.manifest;
                    if m.inconclusive {
                        eprintln!("warning: some checks were inconclusive at this budget");
                    }
                    println!("status: {:?}; outputs in {}", m.status, summary.output_dir.display());
                    ExitCode::from(m.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    let code = e.downcast_ref::<ctlab_cli::RunError>().map_or(1, |r| r.exit_code());
                    ExitCode::from(code as u8)
                }
            }
        }
    }
}
