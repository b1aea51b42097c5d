fn main() {
    std::process::exit(topoattn::cli::run(std::env::args_os()));
}
