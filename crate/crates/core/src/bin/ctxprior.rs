fn main() {
    std::process::exit(ctxprior::cli::main_with_args(std::env::args_os()));
}
