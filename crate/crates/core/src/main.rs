fn main() {
    std::process::exit(oriflag::cli::main());
}
