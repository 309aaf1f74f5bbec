use clap::Parser;

fn main() -> anyhow::Result<()> {
    tristrat::cli::run(tristrat::cli::Cli::parse())
}
