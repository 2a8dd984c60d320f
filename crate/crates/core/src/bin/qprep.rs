use std::process::ExitCode;

fn main() -> ExitCode {
    qprep::cli::dispatch(std::env::args_os().collect())
}
