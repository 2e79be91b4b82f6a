fn main() {
    std::process::exit(fairassure::cli::run(std::env::args_os()));
}
