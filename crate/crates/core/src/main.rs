use clap::Parser;
use heyde::cli::{run, CommandConfig, EXIT_INPUT};

fn main() {
    let config = match CommandConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(run(&config));
}
