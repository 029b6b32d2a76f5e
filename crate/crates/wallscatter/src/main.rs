fn main() {
    std::process::exit(wallscatter::cli::main_with_args(std::env::args_os()));
}
