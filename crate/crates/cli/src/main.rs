use clap::error::ErrorKind;
use clap::Parser;
use popleak_cli::{run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    if let Err(e) = run(cli, &mut stdout, &mut stderr) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
