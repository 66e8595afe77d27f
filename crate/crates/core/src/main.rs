fn main() {
    std::process::exit(flowqa::cli::run(std::env::args_os()));
}
