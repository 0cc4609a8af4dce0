fn main() {
    std::process::exit(starfish_cli::run(std::env::args_os()));
}
