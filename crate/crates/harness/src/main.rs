use std::process::ExitCode;

fn main() -> ExitCode {
    wormsim_harness::cli::main_with(std::env::args_os())
}
