fn main() {
    std::process::exit(aadkit::cli::main_with_env());
}
