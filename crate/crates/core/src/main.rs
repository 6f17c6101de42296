fn main() {
    std::process::exit(psim::cli::main());
}
