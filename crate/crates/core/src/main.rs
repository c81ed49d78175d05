fn main() {
    std::process::exit(micz::cli::main_with_args(std::env::args_os()));
}
