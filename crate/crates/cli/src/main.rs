fn main() {
    std::process::exit(ldfront::run(std::env::args_os()));
}
