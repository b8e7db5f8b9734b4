fn main() -> std::process::ExitCode {
    sortnet::cli::main_with_args(std::env::args_os())
}
