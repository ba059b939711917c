fn main() {
    std::process::exit(fqn_probe::cli::main_with_args(std::env::args_os()));
}
