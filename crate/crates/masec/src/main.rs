use std::process::ExitCode;

fn main() -> ExitCode {
    masec::cli::run(std::env::args_os())
}
