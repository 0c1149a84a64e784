fn main() {
    std::process::exit(gkw::cli::run(std::env::args_os()));
}
