fn main() {
    std::process::exit(hardsat_cli::cli::main_with(std::env::args_os()));
}
