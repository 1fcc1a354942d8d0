use clap::Parser;
use livetune_cli::demo::{run_demo, DemoArgs};

fn main() -> anyhow::Result<()> {
    run_demo(DemoArgs::parse())
}
