fn main() {
    std::process::exit(polysob::cli::main_exit());
}
