fn main() {
    std::process::exit(corridor_rl::cli::run(std::env::args_os()));
}
