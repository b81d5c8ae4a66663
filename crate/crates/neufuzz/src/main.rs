fn main() {
    std::process::exit(neufuzz::cli::run(std::env::args()));
}
