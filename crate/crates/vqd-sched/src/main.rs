fn main() {
    std::process::exit(vqd_sched::cli::run(std::env::args_os()));
}
