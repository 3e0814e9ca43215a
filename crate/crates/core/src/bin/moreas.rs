fn main() {
    std::process::exit(moreas::cli::run(std::env::args_os()));
}
