fn main() {
    std::process::exit(curvkit_cli::run(std::env::args_os()));
}
