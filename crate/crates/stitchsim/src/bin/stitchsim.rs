fn main() {
    std::process::exit(stitchsim::cli::run(std::env::args_os()));
}
