fn main() {
    std::process::exit(gradsync::cli::main_with_args(std::env::args_os()));
}
