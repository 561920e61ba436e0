fn main() {
    std::process::exit(erosion_cli::run(std::env::args_os()));
}
