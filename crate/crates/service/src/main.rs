fn main() {
    std::process::exit(woz_service::cli::run(std::env::args_os()));
}
