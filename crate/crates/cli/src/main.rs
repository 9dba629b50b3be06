use clap::Parser;

fn main() {
    let cli = dsmalc_cli::Cli::parse();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = dsmalc_cli::run(cli, &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code);
}
