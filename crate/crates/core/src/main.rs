use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let code = std::panic::catch_unwind(|| {
        procbind::cli::run(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock())
    })
    .unwrap_or(procbind::cli::EXIT_INTERNAL);
    ExitCode::from(code as u8)
}
