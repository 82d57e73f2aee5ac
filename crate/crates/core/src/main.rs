fn main() -> std::process::ExitCode {
    evcharge::cli::main()
}
