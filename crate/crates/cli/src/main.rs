fn main() {
    std::process::exit(onn_cli::main_with_args(std::env::args_os()));
}
