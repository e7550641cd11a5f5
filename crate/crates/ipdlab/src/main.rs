fn main() {
    std::process::exit(ipdlab::cli::main());
}
