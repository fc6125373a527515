use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    palwabp_cli::configure_threads();
    let code = palwabp_cli::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code as u8)
}
