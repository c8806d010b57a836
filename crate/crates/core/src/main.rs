fn main() {
    std::process::exit(avgmdp::experiments::cli::run(std::env::args_os()));
}
