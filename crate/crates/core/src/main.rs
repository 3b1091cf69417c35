fn main() {
    std::process::exit(cmarck::harness::cli::cli_main(std::env::args_os()));
}
