fn main() {
    std::process::exit(exsis::cli::run_from_args(std::env::args_os()));
}
