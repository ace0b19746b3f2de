fn main() -> std::process::ExitCode {
    utdebug::commands::main()
}
