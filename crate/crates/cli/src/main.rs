fn main() {
    std::process::exit(staloha_cli::main_with_args(std::env::args_os()));
}
