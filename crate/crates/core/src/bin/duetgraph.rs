fn main() {
    std::process::exit(duetgraph::cli::run(std::env::args_os()));
}
