fn main() {
    std::process::exit(vgpricer::cli::run(std::env::args_os()));
}
