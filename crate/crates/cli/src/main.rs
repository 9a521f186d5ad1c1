fn main() {
    std::process::exit(simulate_cli::run());
}
