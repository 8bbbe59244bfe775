fn main() {
    std::process::exit(relgnn::cli::run(std::env::args_os()));
}
