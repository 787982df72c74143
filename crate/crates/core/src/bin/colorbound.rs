fn main() {
    std::process::exit(colorbound::cli::run(std::env::args_os()));
}
