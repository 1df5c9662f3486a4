use clap::Parser;

use coalition_ledger::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("{}", e.render_json());
        std::process::exit(e.exit_code());
    }
}
