use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(svrand::cli::run(std::env::args_os()))
}
