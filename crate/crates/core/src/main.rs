fn main() {
    std::process::exit(polysinc::cli::main());
}
