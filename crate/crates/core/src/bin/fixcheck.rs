//! Command-line front end; see `fixcheck --help`.

fn main() {
    std::process::exit(fixcheck::cli::run());
}
