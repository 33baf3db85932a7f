fn main() {
    std::process::exit(mmap_birl::cli::run(std::env::args_os()));
}
