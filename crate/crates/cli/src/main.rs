fn main() {
    std::process::exit(signlab_cli::run(std::env::args_os()));
}
