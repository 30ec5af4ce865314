fn main() {
    std::process::exit(whasym_cli::run(std::env::args_os()));
}
