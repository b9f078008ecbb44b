fn main() {
    std::process::exit(synthcap::cli::run(std::env::args_os()));
}
