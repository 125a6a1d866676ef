fn main() {
    std::process::exit(lasso_cli::run(std::env::args()));
}
