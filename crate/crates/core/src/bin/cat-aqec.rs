fn main() {
    std::process::exit(cat_aqec::cli::run(std::env::args_os()));
}
