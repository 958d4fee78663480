fn main() {
    std::process::exit(arfima::cli::run(std::env::args_os()));
}
