fn main() -> std::process::ExitCode {
    multishift::cli::main()
}
