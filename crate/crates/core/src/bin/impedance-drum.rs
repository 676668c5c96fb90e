fn main() -> std::process::ExitCode {
    impedance_drum::cli::main()
}
