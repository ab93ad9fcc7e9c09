fn main() {
    std::process::exit(betascale::cli::run_cli(std::env::args_os()));
}
