fn main() {
    std::process::exit(mixbound::cli::main_with_args(std::env::args_os()));
}
