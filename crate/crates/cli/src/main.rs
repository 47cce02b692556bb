use clap::Parser;
use dictlab_cli::{args::Cli, run, EXIT_CHECK_FAILED};
use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            let text = match outcome.raw {
                Some(text) => text,
                None => serde_json::to_string_pretty(&outcome.report).expect("json value") + "\n",
            };
            // A closed pipe downstream is not an error of ours.
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            if outcome.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED as u8)
            }
        }
        Err(e) => {
            eprintln!("dictlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
