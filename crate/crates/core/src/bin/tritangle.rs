fn main() {
    std::process::exit(tritangle::cli::run(std::env::args_os()));
}
