fn main() {
    std::process::exit(inspected_levy::cli::run(std::env::args_os()));
}
