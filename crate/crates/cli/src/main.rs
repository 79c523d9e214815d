mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use cra_core::Execution;

use crate::args::{Cli, Command, ReplayArgs};
use crate::commands::{execute, CliError, Context};
use crate::output::{OutputDigest, RunManifest};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = Execution::from_env();
    let result = match &cli.command {
        Command::Replay(r) => replay(r, exec),
        command => run(command.clone(), &cli, exec),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(mut command: Command, cli: &Cli, exec: Execution) -> Result<(), CliError> {
    let ctx = Context {
        seed: cli.seed,
        format: cli.format,
        exec,
    };
    let run = execute(&mut command, &ctx)?;
    let manifest = RunManifest::new(&command, cli.seed, cli.format, &run.outputs);
    run.outputs.write(&cli.out_dir, &manifest).map_err(|e| {
        CliError::Failure(format!("cannot write to {}: {e}", cli.out_dir.display()))
    })?;
    print!("{}", run.stdout);
    match run.failure {
        Some(msg) => Err(CliError::Failure(msg)),
        None => Ok(()),
    }
}

fn replay(args: &ReplayArgs, exec: Execution) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.manifest)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.manifest.display())))?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| {
        CliError::Usage(format!(
            "malformed manifest {}: {e}",
            args.manifest.display()
        ))
    })?;
    let mut command = manifest.command.clone();
    let ctx = Context {
        seed: manifest.seed,
        format: manifest.format,
        exec,
    };
    let run = execute(&mut command, &ctx)?;
    let fresh = run.outputs.digests();

    let mut mismatches = 0;
    for want in &manifest.outputs {
        let status = match fresh.iter().find(|d| d.file == want.file) {
            Some(got) if got == want => "ok",
            Some(_) => "MISMATCH",
            None => "MISSING",
        };
        if status != "ok" {
            mismatches += 1;
        }
        println!("{status:<8} {} {}", want.sha256, want.file);
    }
    for extra in fresh.iter().filter(|d| {
        !manifest
            .outputs
            .iter()
            .any(|w: &OutputDigest| w.file == d.file)
    }) {
        mismatches += 1;
        println!("{:<8} {} {}", "EXTRA", extra.sha256, extra.file);
    }
    if mismatches > 0 {
        return Err(CliError::Failure(format!(
            "{mismatches} output(s) differ from the manifest"
        )));
    }
    Ok(())
}
