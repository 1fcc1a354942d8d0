use std::process::ExitCode;

use clap::Parser;
use livetune_cli::{exit, run_tune, TuneArgs};

fn main() -> ExitCode {
    let args = match TuneArgs::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { exit::OK as u8 });
        }
    };
    match run_tune(&args, &mut std::io::stdout()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let (true, Some(resp)) = (args.json, e.wire()) {
                print!("{}", resp.encode());
            }
            eprintln!("tune: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
