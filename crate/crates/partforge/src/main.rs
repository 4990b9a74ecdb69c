use clap::Parser;

use partforge::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
