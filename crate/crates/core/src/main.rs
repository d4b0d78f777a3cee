fn main() {
    std::process::exit(slideloop::cli::main());
}
