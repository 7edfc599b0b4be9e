fn main() {
    std::process::exit(plc_cli::cli_main(std::env::args_os()));
}
