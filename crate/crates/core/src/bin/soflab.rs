use clap::Parser;

fn main() {
    let args = soflab::cli::Args::parse();
    std::process::exit(soflab::cli::main_with(args));
}
