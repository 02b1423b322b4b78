use std::process::ExitCode;

use clap::Parser;
use qbrown_cli::{init_threads, run, Cli, RunConfig};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let config = match init_threads().and_then(|_| RunConfig::from_cli(cli)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qbrown: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&config) {
        Ok(outcome) => {
            for line in &outcome.log {
                eprintln!("{line}");
            }
            for p in &outcome.written {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err((e, written)) => {
            for p in &written {
                println!("{}", p.display());
            }
            eprintln!("qbrown: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
