fn main() {
    std::process::exit(vtf::cli::run(std::env::args_os()));
}
