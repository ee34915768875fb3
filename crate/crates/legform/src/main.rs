use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(legform::cli::run(std::env::args_os()))
}
