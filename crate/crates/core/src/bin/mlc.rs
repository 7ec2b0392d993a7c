use clap::Parser;
use microlocal::cli::{dispatch, CliConfig};

fn main() {
    std::process::exit(dispatch(CliConfig::parse()));
}
