fn main() {
    env_logger::init();
    std::process::exit(brw_cli::run(std::env::args_os()));
}
