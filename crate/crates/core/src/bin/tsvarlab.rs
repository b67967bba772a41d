fn main() {
    std::process::exit(tsvarlab::cli::run(std::env::args_os()));
}
