use std::io::Write;

fn main() {
    let mut out = std::io::BufWriter::new(std::io::stdout().lock());
    let mut code = carl_cli::run(std::env::args_os(), &mut out);
    if out.flush().is_err() && code == 0 {
        code = 1;
    }
    std::process::exit(code);
}
