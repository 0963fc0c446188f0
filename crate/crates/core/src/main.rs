fn main() {
    std::process::exit(carleman::cli::run(std::env::args_os()));
}
