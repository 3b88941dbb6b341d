fn main() {
    std::process::exit(kisinlab::cli::run(std::env::args_os()));
}
