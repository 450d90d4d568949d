fn main() {
    std::process::exit(teleport_core::cli::main());
}
