fn main() {
    std::process::exit(fantappie_cli::dispatch(std::env::args_os()));
}
