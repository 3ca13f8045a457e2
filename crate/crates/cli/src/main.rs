use clap::Parser;

fn main() {
    let cli = aoi_cli::Cli::parse();
    if let Err(e) = aoi_cli::run(&cli) {
        eprintln!("aoisim: {e}");
        std::process::exit(e.exit_code());
    }
}
