fn main() {
    std::process::exit(netaware::cli::main());
}
