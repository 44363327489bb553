fn main() {
    std::process::exit(decomap_cli::run(std::env::args()));
}
