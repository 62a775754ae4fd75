fn main() {
    std::process::exit(ticket_triage::cli::main_with_args(std::env::args_os()));
}
