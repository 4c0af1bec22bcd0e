use std::process::ExitCode;

fn main() -> ExitCode {
    visbench_service::cli::main_with_args(std::env::args_os())
}
