fn main() {
    std::process::exit(bidisk_cli::run(std::env::args_os()));
}
