fn main() -> std::process::ExitCode {
    eocprune::cli::run()
}
