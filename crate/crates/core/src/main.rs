fn main() {
    std::process::exit(euler_stat::cli::main_with_args(std::env::args_os()));
}
