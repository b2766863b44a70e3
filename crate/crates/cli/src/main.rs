use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(torus_lasso_cli::run(std::env::args_os()))
}
