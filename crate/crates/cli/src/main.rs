use std::process::ExitCode;

use clap::Parser;
use obrs_cli::args::Cli;
use obrs_cli::execute;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(manifest) => {
            for check in &manifest.checks {
                let verdict = if check.passed { "ok" } else { "FAILED" };
                println!(
                    "{verdict:>6}  {}: {:e} (limit {:e})",
                    check.name, check.value, check.tolerance
                );
            }
            for path in &manifest.outputs {
                println!("wrote {path}");
            }
            if manifest.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
