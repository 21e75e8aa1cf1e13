use std::process::ExitCode;

fn main() -> ExitCode {
    affx::cli::main()
}
