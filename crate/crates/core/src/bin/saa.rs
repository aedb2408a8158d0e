fn main() {
    std::process::exit(saa::harness::cli::main_with_args(std::env::args_os()));
}
