fn main() {
    std::process::exit(mellinbp_core::cli::main_with_args(std::env::args_os()));
}
