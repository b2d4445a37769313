use clap::Parser;
use flowmend::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let mut out = std::io::stdout().lock();
    match run(cli, &mut out) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("flowmend: {e}");
            std::process::exit(3);
        }
    }
}
