fn main() {
    std::process::exit(hilfer_uh::cli::main_entry());
}
