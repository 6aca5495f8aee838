use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = expost_cli::run(std::env::args_os());
    let _ = writeln!(std::io::stdout().lock(), "{}", outcome.render());
    ExitCode::from(outcome.exit_code as u8)
}
