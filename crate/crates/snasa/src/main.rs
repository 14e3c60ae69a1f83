fn main() {
    std::process::exit(snasa::cli::run(std::env::args_os()));
}
