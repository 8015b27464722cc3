fn main() {
    std::process::exit(layoutqa::cli::run(std::env::args_os()));
}
