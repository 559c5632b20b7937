use clap::Parser;

fn main() {
    std::process::exit(bagcn::cli::run(bagcn::cli::Cli::parse()));
}
