fn main() {
    std::process::exit(tasekit::cli::run());
}
