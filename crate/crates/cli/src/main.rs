use clap::Parser;
use tpns_cli::{run, Cli};

fn main() {
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.reason());
            e.exit_code()
        }
    };
    std::process::exit(code);
}
