use clap::Parser;

fn main() {
    let cli = weakarma::cli::Cli::parse();
    if let Err(e) = weakarma::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
