use std::process::ExitCode;

fn main() -> ExitCode {
    powcorr::cli::main_with_args(std::env::args_os())
}
