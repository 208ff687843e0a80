use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use wallforge::{run, Command, RunConfig};

/// Orthogonal domain walls between convection roll systems.
#[derive(Parser)]
#[command(name = "wallforge", version)]
struct Args {
    command: Command,
    /// Run configuration (`section.key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `run.out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = RunConfig::load(&args.config).and_then(|cfg| {
        let out = args.out.clone().unwrap_or_else(|| cfg.resolve(&cfg.out_dir));
        run(args.command, &cfg, &out)
    });
    match result {
        Ok(o) => {
            println!("{}", o.message);
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
