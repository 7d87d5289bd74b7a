fn main() {
    std::process::exit(fundlink_cli::run(std::env::args_os()));
}
