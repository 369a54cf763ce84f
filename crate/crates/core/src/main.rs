fn main() {
    std::process::exit(multivote::cli::run(std::env::args_os()));
}
