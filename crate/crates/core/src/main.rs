fn main() {
    std::process::exit(wloss::cli::main(std::env::args_os()));
}
