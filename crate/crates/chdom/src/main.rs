fn main() {
    std::process::exit(chdom::cli::run());
}
