fn main() {
    std::process::exit(hedonic::cli::main_with_args(std::env::args_os()));
}
