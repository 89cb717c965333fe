fn main() {
    std::process::exit(segeval::cli::run(std::env::args_os()));
}
