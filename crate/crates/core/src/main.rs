fn main() {
    std::process::exit(divform::cli::main());
}
