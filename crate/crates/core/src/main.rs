// SPDX-License-Identifier: Apache-2.0

use std::process::ExitCode;

use clap::Parser;
use tldn::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let message = e.to_string();
                let first = message.lines().next().unwrap_or("invalid arguments");
                eprintln!("{}", serde_json::json!({ "error": "input", "message": first }));
                return ExitCode::from(2);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.class.exit_code() as u8)
        }
    }
}
