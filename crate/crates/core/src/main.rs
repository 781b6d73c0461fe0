fn main() {
    std::process::exit(censorsim::cli::run_cli(std::env::args_os()));
}
