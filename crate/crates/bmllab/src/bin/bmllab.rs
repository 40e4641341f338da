fn main() {
    std::process::exit(bmllab::cli::run());
}
