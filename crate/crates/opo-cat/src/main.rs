use clap::Parser;

fn main() {
    let cli = opo_cat::Cli::parse();
    std::process::exit(opo_cat::run_cli(&cli));
}
