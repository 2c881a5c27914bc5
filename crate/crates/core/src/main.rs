use clap::Parser;

use posterior_design::cli::{error_json, run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(doc) => println!("{}", serde_json::to_string_pretty(&doc).expect("report serializes")),
        Err(err) => {
            eprintln!("error: {err}");
            println!("{}", serde_json::to_string_pretty(&error_json(&err)).expect("error serializes"));
            std::process::exit(err.exit_code());
        }
    }
}
