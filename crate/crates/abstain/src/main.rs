fn main() {
    std::process::exit(abstain::cli::run(std::env::args_os()));
}
