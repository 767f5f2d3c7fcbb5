fn main() {
    std::process::exit(orbital_cli::run(std::env::args_os()));
}
