use clap::Parser;
use medagent_datagen::cli::{run, DatagenCommand};

#[derive(Parser)]
#[command(name = "datagen", about = "Synthetic trajectory generation")]
struct Cli {
    #[command(subcommand)]
    command: DatagenCommand,
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    run(Cli::parse().command)
}
