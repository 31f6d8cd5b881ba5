fn main() {
    std::process::exit(foliation_lab::io::run(std::env::args_os()));
}
