fn main() {
    std::process::exit(longgreeks_cli::main_with(std::env::args_os()));
}
