use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use multibaker_cli::{run, Args};

fn main() -> ExitCode {
    let args = Args::parse();
    let result = args.resolve().and_then(|config| run(&config));
    match result {
        Ok(Some(text)) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(text.as_bytes()).is_err() {
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
