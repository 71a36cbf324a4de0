use std::process::ExitCode;

fn main() -> ExitCode {
    rankselect::cli::run()
}
