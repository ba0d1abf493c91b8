fn main() -> std::process::ExitCode {
    fibred_rotation::cli::main()
}
