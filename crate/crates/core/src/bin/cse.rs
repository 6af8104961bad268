fn main() {
    std::process::exit(cse_core::harness::run_cli(std::env::args_os()));
}
