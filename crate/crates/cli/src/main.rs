use clap::Parser;

fn main() {
    let cli = rulesolve_cli::Cli::parse();
    match rulesolve_cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}
