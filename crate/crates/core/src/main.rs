fn main() {
    std::process::exit(syntaxprobe::cli::run(std::env::args_os()));
}
