use std::process::ExitCode;

fn main() -> ExitCode {
    pgrad_core::cli::init_logging();
    ExitCode::from(pgrad_core::cli::run(std::env::args_os()).code())
}
