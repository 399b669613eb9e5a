fn main() {
    std::process::exit(cscovq::cli::main_with_args(std::env::args_os()));
}
