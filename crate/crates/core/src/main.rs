fn main() {
    std::process::exit(schmid_lab::cli::run(std::env::args_os()));
}
