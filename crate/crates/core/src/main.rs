fn main() {
    std::process::exit(shrinkcov::cli::main_from_env());
}
