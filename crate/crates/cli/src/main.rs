fn main() {
    std::process::exit(thetafock_cli::main_with_args(std::env::args_os()));
}
