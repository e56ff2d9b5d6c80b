use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let stdin = io::stdin();
    let mut input = stdin.lock();
    let mut stdout = io::BufWriter::new(io::stdout().lock());
    let mut stderr = io::stderr();
    let code = pentagram::cli::run(std::env::args_os(), &mut input, &mut stdout, &mut stderr);
    ExitCode::from(code as u8)
}
