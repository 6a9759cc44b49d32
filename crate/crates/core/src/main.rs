use clap::Parser;

fn main() {
    let cli = liederiv::cli::Cli::parse();
    std::process::exit(liederiv::cli::execute(cli));
}
