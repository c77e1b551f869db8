use clap::Parser;
use conceptrank_service::cli::{run, Cli};

fn main() -> anyhow::Result<()> {
    run(Cli::parse(), &mut std::io::stdout().lock())
}
