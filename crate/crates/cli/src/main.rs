fn main() {
    std::process::exit(rotation_cli::main_with_args(std::env::args_os()));
}
