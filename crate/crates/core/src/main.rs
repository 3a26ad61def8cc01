use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let (code, output) = esep::cli::run(std::env::args_os());
    let stream = if code == esep::cli::EXIT_USAGE || code == esep::cli::EXIT_PRECONDITION {
        std::io::stderr().write_all(output.as_bytes())
    } else {
        std::io::stdout().write_all(output.as_bytes())
    };
    let _ = stream;
    ExitCode::from(code as u8)
}
