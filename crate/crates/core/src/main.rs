fn main() {
    std::process::exit(multiwiki::app::cli::main_exit_code());
}
