use clap::Parser;
use fdf_cli::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = fdf_cli::run(&cli) {
        eprintln!("fdf: {e}");
        std::process::exit(e.exit_code());
    }
}
