fn main() {
    std::process::exit(onebit::cli::main());
}
