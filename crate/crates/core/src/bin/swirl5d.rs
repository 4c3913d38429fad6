fn main() {
    std::process::exit(swirl5d::cli::run_from(std::env::args_os()));
}
