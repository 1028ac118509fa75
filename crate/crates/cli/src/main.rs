fn main() {
    std::process::exit(noisetag_cli::run(std::env::args_os()));
}
