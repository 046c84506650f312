fn main() {
    std::process::exit(collabnet_cli::main_with_args(std::env::args_os()));
}
