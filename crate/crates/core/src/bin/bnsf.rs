use clap::Parser;

use bnsf::cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    std::process::exit(execute(&cli.command));
}
