fn main() -> std::process::ExitCode {
    synthcd::main_exit()
}
