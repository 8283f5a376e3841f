fn main() {
    std::process::exit(qwell_sp::run_cli(std::env::args_os()));
}
