fn main() {
    std::process::exit(kuramoto_cycle::cli::run(std::env::args_os()));
}
