fn main() {
    std::process::exit(intervene_cli::run(std::env::args_os()));
}
