fn main() {
    std::process::exit(terracast::cli::run(std::env::args_os()));
}
