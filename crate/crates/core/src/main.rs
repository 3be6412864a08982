fn main() {
    std::process::exit(sparse_explain::cli::run_cli(std::env::args_os()));
}
