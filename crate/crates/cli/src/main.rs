fn main() {
    std::process::exit(scarforge_cli::run(std::env::args_os()));
}
