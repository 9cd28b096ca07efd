fn main() {
    std::process::exit(ghz_witness::cli::run(std::env::args_os()));
}
