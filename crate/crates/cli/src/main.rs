fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(scion_cli::main_with(&args));
}
