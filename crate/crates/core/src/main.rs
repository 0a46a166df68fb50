fn main() {
    std::process::exit(chordmink::cli::run(std::env::args_os()));
}
