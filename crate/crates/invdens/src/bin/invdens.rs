fn main() {
    std::process::exit(invdens::cli::main_with_args(std::env::args_os()));
}
