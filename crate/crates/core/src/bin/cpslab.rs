fn main() {
    std::process::exit(cpslab::lab::cli::run(std::env::args_os()));
}
