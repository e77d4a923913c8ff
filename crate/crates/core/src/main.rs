fn main() {
    std::process::exit(camel::cli::run_cli(std::env::args_os()));
}
