use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(hopprint::cli::run(std::env::args_os()) as u8)
}
