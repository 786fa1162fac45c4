use clap::Parser;

use forge::cli::{dispatch, Cli, CliError};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Version/help requests are successes; bad usage exits 1.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            eprintln!("run `forge --help` for usage");
            std::process::exit(1);
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
