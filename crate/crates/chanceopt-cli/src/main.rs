fn main() {
    std::process::exit(chanceopt_cli::cli::main_with(std::env::args_os()));
}
