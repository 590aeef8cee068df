fn main() {
    std::process::exit(spinwire::cli::run());
}
