use std::io;

fn main() {
    let code = chiral_sta::cli::run(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr());
    std::process::exit(code);
}
