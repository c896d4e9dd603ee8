fn main() {
    std::process::exit(spatspec::cli::run());
}
