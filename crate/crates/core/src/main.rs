fn main() {
    std::process::exit(radial_ks::cli::run(std::env::args_os()));
}
