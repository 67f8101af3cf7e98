use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use medagent_datagen::cli::DatagenCommand;
use medagent_eval::cli::EvalArgs;

use crate::config::Config;
use crate::replay::replay_file;

#[derive(Debug, Parser)]
#[command(name = "medagent", version, about = "On-device health assistant: service, replay, data generation and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Start the HTTP service.
    Serve(Config),
    /// Re-run recorded episodes and diff them against the files.
    Replay {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Generate, enhance, verify and interleave training data.
    #[command(subcommand)]
    Datagen(DatagenCommand),
    /// Score predictions against references.
    Eval(EvalArgs),
}

pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Serve(cfg) => {
            let svc = Arc::new(cfg.build_service()?);
            let rt = tokio::runtime::Runtime::new()?;
            // The blocking HTTP clients inside the service must not be
            // dropped on the runtime, so the last reference stays out here.
            let served = rt.block_on({
                let svc = svc.clone();
                async move {
                    let listener = crate::http::bind(&cfg.host, cfg.port).await?;
                    crate::http::serve(svc, listener, Duration::from_secs(cfg.tick_secs)).await
                }
            });
            drop(rt);
            drop(svc);
            served?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay { files } => {
            let mut all_match = true;
            for f in &files {
                let report = replay_file(f)?;
                all_match &= report.is_identical();
                println!("{}: {report}", f.display());
            }
            Ok(if all_match { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Datagen(cmd) => medagent_datagen::cli::run(cmd).map(|_| ExitCode::SUCCESS),
        Command::Eval(args) => medagent_eval::cli::run(args).map(|_| ExitCode::SUCCESS),
    }
}
