fn main() -> std::process::ExitCode {
    tabcomplete::cli::main()
}
