use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(illiq_cli::execute(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
    ))
}
