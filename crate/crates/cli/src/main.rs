mod args;
mod design;
mod error;
mod io;
mod manifest;
mod response;
mod simulate;
mod system;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{EXIT_OK, EXIT_USAGE};
use manifest::Run;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut run = match Run::new(&cli.out_dir, cli.dry_run, cli.command.name(), cli.command.parameters()) {
        Ok(run) => run,
        Err(e) => {
            eprintln!("cicdec: {e}");
            return ExitCode::from(e.code());
        }
    };
    let result = match &cli.command {
        Command::Design(a) => design::run(a, &mut run),
        Command::Simulate(a) => simulate::run(a, &mut run),
        Command::Verify(a) => verify::run(a, &mut run),
        Command::Response(a) => response::run(a, &mut run),
        Command::AdderVerify(a) => verify::run_adder(a, &mut run),
    };
    let code = result.as_ref().map_or_else(|e| e.code(), |_| EXIT_OK);
    if let Err(e) = &result {
        eprintln!("cicdec: {e}");
    }
    if let Err(e) = run.finish(code) {
        eprintln!("cicdec: {e}");
        return ExitCode::from(e.code());
    }
    if cli.dry_run && result.is_ok() {
        println!("dry run: flags valid, nothing computed");
    }
    ExitCode::from(code)
}
