use clap::Parser;

fn main() {
    let cli = mollify::cli::Cli::parse();
    if let Err(err) = mollify::cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
