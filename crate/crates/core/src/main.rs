fn main() {
    std::process::exit(morselab::cli::main_with_args(std::env::args()));
}
