fn main() {
    std::process::exit(debtgame::cli::run(std::env::args_os()));
}
