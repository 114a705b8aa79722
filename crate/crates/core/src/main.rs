fn main() {
    std::process::exit(mirrorsim_core::cli::run(std::env::args_os()));
}
