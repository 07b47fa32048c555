fn main() {
    std::process::exit(relayguard::cli::run_cli(std::env::args_os()));
}
