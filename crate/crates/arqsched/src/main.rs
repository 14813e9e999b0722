fn main() {
    let stdout = std::io::stdout();
    let code = arqsched::run_command(std::env::args_os(), &mut stdout.lock());
    std::process::exit(code);
}
