fn main() {
    std::process::exit(fmdiag::cli::run(std::env::args_os()));
}
