fn main() {
    std::process::exit(subweibull::cli::run(std::env::args_os()));
}
