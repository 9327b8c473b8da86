fn main() {
    std::process::exit(gibc::cli::main_with_args(std::env::args().collect()));
}
