use std::process::ExitCode;

fn main() -> ExitCode {
    fairadjust::cli::main()
}
