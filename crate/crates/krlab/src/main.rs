use clap::Parser;
use krlab::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let out = run(&cli);
    if out.code == 0 || out.code == krlab::cli::EXIT_MISMATCH {
        print!("{}", out.stdout);
    } else {
        eprint!("{}", out.stdout);
    }
    std::process::exit(out.code);
}
