use clap::Parser;

use ranksde_cli::{main_with, Cli};

fn main() {
    std::process::exit(main_with(Cli::parse()));
}
