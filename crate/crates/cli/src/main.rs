use std::process::ExitCode;

use mimo_converge_cli::{emit, parse_config, run};

fn main() -> ExitCode {
    match parse_config(std::env::args_os()).and_then(|cfg| run(&cfg).and_then(|r| emit(&r, &cfg))) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mimo-converge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
