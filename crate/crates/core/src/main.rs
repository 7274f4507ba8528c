fn main() {
    std::process::exit(dtaf_core::cli::main_with_args(std::env::args_os()));
}
