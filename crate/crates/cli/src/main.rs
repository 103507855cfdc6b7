fn main() -> std::process::ExitCode {
    codehinter_cli::commands::main_with(std::env::args_os())
}
