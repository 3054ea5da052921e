fn main() {
    std::process::exit(rydwire::cli::run(std::env::args_os()));
}
