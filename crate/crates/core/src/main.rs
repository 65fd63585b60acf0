fn main() {
    std::process::exit(imat::cli::main());
}
