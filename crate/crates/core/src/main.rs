fn main() {
    std::process::exit(aigen_eval::cli::run(std::env::args_os()));
}
