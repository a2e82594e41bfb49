use std::io::Write;

use clap::Parser;
use lookdown_cli::{run, Cli, CliError, Command, EXIT_OK};

fn main() {
    let cli = Cli::parse();
    let is_eval = matches!(cli.command, Command::Eval(_));
    match run(cli) {
        Ok(line) => {
            // Data may already be on stdout; keep it clean.
            if is_eval {
                let _ = writeln!(std::io::stdout(), "{line}");
            } else {
                eprintln!("{line}");
            }
            std::process::exit(EXIT_OK);
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::ValidationFailed(_) = e {
                eprintln!("see the report for the failing rows");
            }
            std::process::exit(e.exit_code());
        }
    }
}
