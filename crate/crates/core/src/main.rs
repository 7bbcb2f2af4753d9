fn main() {
    std::process::exit(qsynth::cli::main_with_args(std::env::args_os()));
}
