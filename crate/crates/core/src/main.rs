fn main() {
    std::process::exit(tpbsim_core::cli::cli_main(std::env::args_os()));
}
