fn main() {
    std::process::exit(voinav::cli::main_with(std::env::args_os(), std::env::vars().collect()));
}
