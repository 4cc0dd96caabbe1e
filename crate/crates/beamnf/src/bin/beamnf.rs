fn main() {
    std::process::exit(beamnf::experiments::cli::main_with_args(std::env::args_os()));
}
