fn main() {
    std::process::exit(mrm_sim::cli::main());
}
