use std::process::ExitCode;

use clap::Parser;

use hquery_cli::{exit, run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{}", out.text);
            if let Some(path) = &out.report_path {
                println!("report: {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hquery: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
