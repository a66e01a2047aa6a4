use clap::Parser;
use ggmsel::commands::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
