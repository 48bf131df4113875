use clap::Parser;

fn main() {
    let cli = homs_cli::Cli::parse();
    if let Err(e) = homs_cli::execute(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
