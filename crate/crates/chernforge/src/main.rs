fn main() {
    std::process::exit(chernforge::cli::run(std::env::args_os()));
}
