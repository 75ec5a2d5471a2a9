fn main() {
    std::process::exit(collabmetrics::cli::run(std::env::args_os()));
}
