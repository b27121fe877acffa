fn main() {
    std::process::exit(enselect::cli::main_with_args(std::env::args_os()));
}
