fn main() {
    std::process::exit(srl::dispatch(std::env::args_os()));
}
