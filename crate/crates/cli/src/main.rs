fn main() {
    std::process::exit(svoc_cli::run(std::env::args_os()));
}
