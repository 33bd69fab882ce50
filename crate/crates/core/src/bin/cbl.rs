fn main() {
    std::process::exit(codebook_learn::cli::main_with_args(std::env::args_os()));
}
