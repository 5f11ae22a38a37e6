fn main() {
    std::process::exit(hypmin_cli::run(std::env::args_os()));
}
