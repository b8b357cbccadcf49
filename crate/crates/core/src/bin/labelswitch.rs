fn main() {
    std::process::exit(labelswitch::cli::run_cli(std::env::args()));
}
