use std::process::ExitCode;

fn main() -> ExitCode {
    copula_eda_bench::cli::main(std::env::args_os())
}
