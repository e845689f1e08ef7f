use clap::Parser;

use gpmi::harness::cli::{error_line, run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: kind=argument msg={:?}", e.to_string());
            std::process::exit(1);
        }
    }
    if let Err(e) = run(cli) {
        eprintln!("{}", error_line(&e));
        std::process::exit(1);
    }
}
