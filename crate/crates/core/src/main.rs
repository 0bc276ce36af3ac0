fn main() {
    std::process::exit(monoinv::cli::run(std::env::args_os()));
}
