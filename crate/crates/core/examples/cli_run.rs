//! The library entry point behind `sstokes`, driven in-process.

use clap::Parser;
use stochastic_stokes::cli::{run, Cli};

fn main() {
    let cli = Cli::parse_from(["sstokes", "mesh-info", "--L", "1", "--n", "8"]);
    let code = run(cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
