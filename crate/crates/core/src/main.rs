fn main() {
    std::process::exit(bresse_core::cli::main_with_args(std::env::args_os()));
}
