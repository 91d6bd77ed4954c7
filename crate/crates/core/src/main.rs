fn main() {
    std::process::exit(gerber_shiu_qmc::cli::main_with_args(std::env::args_os()));
}
