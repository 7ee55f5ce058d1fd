fn main() {
    std::process::exit(lsmtopo_cli::commands::main_with(std::env::args_os()));
}
