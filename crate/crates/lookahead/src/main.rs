use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use lookahead::cli::Cli;
use lookahead::run;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = serde_json::json!({ "error": { "kind": "usage", "message": e.to_string().trim() } });
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    let stdout = std::io::stdout();
    let mut progress = stdout.lock();
    match run::run(&cli.invocation(), &mut progress) {
        Ok(outcome) => {
            let _ = writeln!(progress, "manifest: {}", outcome.manifest_path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let _ = progress.flush();
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
