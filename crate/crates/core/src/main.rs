fn main() -> std::process::ExitCode {
    incomm_pw::cli::main()
}
