fn main() {
    std::process::exit(plfc::cli::run(std::env::args_os()));
}
