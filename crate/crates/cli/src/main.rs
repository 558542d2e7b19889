use clap::Parser;

fn main() {
    let cli = mgl_cli::Cli::parse();
    if let Err(e) = mgl_cli::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
