fn main() {
    std::process::exit(maxcgo::cli::run(std::env::args_os()));
}
