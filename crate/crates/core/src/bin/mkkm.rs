fn main() {
    std::process::exit(matroid_kkm::apps::cli_run(std::env::args().skip(1).collect()));
}
