fn main() {
    std::process::exit(nhcrit::cli::run(std::env::args_os()));
}
