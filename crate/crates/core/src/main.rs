fn main() {
    std::process::exit(mindlattice::cli::main_with_args(std::env::args_os()));
}
