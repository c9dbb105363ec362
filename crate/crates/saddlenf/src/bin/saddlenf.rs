fn main() {
    std::process::exit(saddlenf::cli::run(std::env::args_os()));
}
