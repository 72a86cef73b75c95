fn main() {
    std::process::exit(s0l_cli::run(std::env::args_os()));
}
