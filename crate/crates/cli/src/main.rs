use clap::Parser;

fn main() {
    let cli = cardshuffle_cli::Cli::parse();
    std::process::exit(cardshuffle_cli::run(cli));
}
