use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(rus_sim::run_cli(std::env::args_os()))
}
