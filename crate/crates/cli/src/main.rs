fn main() {
    std::process::exit(qtherm::run());
}
