fn main() {
    std::process::exit(bigbang_core::cli::main_with_args(std::env::args_os()));
}
