fn main() {
    std::process::exit(gbs_emulator::cli::main_entry());
}
