fn main() {
    std::process::exit(eerm_cli::main_with(std::env::args_os()));
}
