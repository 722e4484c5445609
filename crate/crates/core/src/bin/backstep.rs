fn main() {
    std::process::exit(backstep::cli::run(std::env::args_os()));
}
