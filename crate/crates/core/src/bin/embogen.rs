fn main() {
    std::process::exit(embogen::cli::run(std::env::args_os()));
}
