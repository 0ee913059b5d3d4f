use clap::Parser;
use ordbridge_cli::{run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            std::process::exit(e.exit_code());
        }
    };
    if let Err(e) = run(&cli) {
        eprintln!("ordbridge: {e}");
        std::process::exit(e.exit_code());
    }
}
