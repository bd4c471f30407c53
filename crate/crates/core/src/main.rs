fn main() {
    std::process::exit(sqsa::cli::run(std::env::args_os()));
}
