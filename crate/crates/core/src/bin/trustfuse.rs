use std::process::ExitCode;

fn main() -> ExitCode {
    trustfuse::cli::main()
}
