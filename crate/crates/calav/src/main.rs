use std::process::ExitCode;

fn main() -> ExitCode {
    calav::cli::main_with_args(std::env::args_os())
}
