use clap::Parser;

use blenderlab::cli::{run, RunConfig};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BLENDERLAB_LOG", "off")).init();
    let cfg = RunConfig::parse();
    std::process::exit(run(&cfg));
}
