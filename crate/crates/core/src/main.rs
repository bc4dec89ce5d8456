fn main() {
    std::process::exit(baker_thermo::cli::main_with(std::env::args_os()));
}
