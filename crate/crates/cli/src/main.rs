mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Failure, RefineInputs};
use manifest::Manifest;

/// Shape correspondence with functional maps.
#[derive(Debug, Parser)]
#[command(name = "fmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Manifest of `key = value` lines.
    manifest: Option<PathBuf>,
    /// Override a manifest key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides the `output` key).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Match two meshes end to end.
    Match {
        #[command(flatten)]
        common: Common,
        /// Also measure against the `ground_truth` map.
        #[arg(long)]
        evaluate: bool,
    },
    /// Refine given maps between two meshes.
    Refine {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t12: Option<PathBuf>,
        #[arg(long)]
        t21: Option<PathBuf>,
        #[arg(long)]
        c12: Option<PathBuf>,
        #[arg(long)]
        c21: Option<PathBuf>,
    },
    /// Measure a map against ground truth.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Map to measure; defaults to T12.txt in the output directory.
        #[arg(long)]
        t12: Option<PathBuf>,
        /// Reverse map, for bijectivity.
        #[arg(long)]
        t21: Option<PathBuf>,
    },
    /// Find the orientation-reversing self-map of one mesh.
    Selfsym {
        #[command(flatten)]
        common: Common,
    },
}

fn load_manifest(common: &Common) -> Result<Manifest, Failure> {
    let mut m = match &common.manifest {
        Some(path) => Manifest::load(path)?,
        None => Manifest::empty(""),
    };
    m.apply_overrides(&common.set)?;
    if let Some(out) = &common.out {
        m.output = out.clone();
    }
    Ok(m)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Match { common, evaluate } => commands::run_match(&load_manifest(&common)?, evaluate),
        Command::Refine {
            common,
            t12,
            t21,
            c12,
            c21,
        } => commands::run_refine(&load_manifest(&common)?, &RefineInputs { t12, t21, c12, c21 }),
        Command::Evaluate { common, t12, t21 } => {
            commands::run_evaluate(&load_manifest(&common)?, t12.as_deref(), t21.as_deref())
        }
        Command::Selfsym { common } => commands::run_selfsym(&load_manifest(&common)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            report(&Failure::Usage(e.kind().to_string()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report(&f);
            ExitCode::from(f.exit_code() as u8)
        }
    }
}

fn report(f: &Failure) {
    let json = serde_json::json!({ "kind": f.kind(), "message": f.message() });
    eprintln!("{json}");
}
