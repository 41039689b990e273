fn main() {
    std::process::exit(gmac_ldpc::cli::run(std::env::args_os()));
}
