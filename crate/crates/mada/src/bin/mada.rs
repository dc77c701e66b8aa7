fn main() {
    std::process::exit(mada::runner::cli::run_cli(std::env::args()));
}
