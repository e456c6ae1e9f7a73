use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let mut stdout = std::io::stdout().lock();
    let code = quatform::cli::run(&args, &mut stdout);
    ExitCode::from(code as u8)
}
