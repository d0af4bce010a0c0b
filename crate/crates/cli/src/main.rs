fn main() {
    std::process::exit(ssg_cli::cli::run(std::env::args_os()));
}
