fn main() {
    std::process::exit(falva::cli::run(std::env::args_os()));
}
