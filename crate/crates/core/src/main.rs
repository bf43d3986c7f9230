fn main() {
    std::process::exit(ratedist::cli::run(std::env::args_os()));
}
