use std::io;

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let stdin = io::stdin();
    let code = stvmd_cli::run(
        &argv,
        &mut stdin.lock(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    std::process::exit(code);
}
