fn main() -> std::process::ExitCode {
    betasched::cli::main()
}
