fn main() {
    std::process::exit(rffkim::harness::cli::main());
}
