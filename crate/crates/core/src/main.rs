fn main() {
    std::process::exit(dcr_lab::cli::main_with_args(std::env::args_os()));
}
