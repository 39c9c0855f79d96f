fn main() {
    std::process::exit(llab::cli::run(std::env::args_os()));
}
