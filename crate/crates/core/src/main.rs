fn main() {
    std::process::exit(fogmetry::cli::run(std::env::args_os()));
}
