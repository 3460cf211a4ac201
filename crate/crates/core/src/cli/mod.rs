//! The `soflab` experiment runner.
//!
//! Exit status: 0 on success (soft warnings included), 1 when a hard
//! assertion or the computation fails, 2 on a schema error, 3 when a node
//! budget runs out.

pub mod run;
pub mod spec;

use std::path::PathBuf;

use clap::Parser;

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "soflab", version, about = "Finite-stage sofic and amenable entropy experiments")]
pub struct Args {
    /// Experiment file (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Worker threads; affects wall time only.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Search-node budget, overriding the file's `params.budget`.
    #[arg(long)]
    pub budget_nodes: Option<u64>,
    /// Output directory.
    #[arg(long, env = "SOFLAB_OUT", default_value = "soflab-out")]
    pub out: PathBuf,
    /// Check the file without running it.
    #[arg(long)]
    pub validate: bool,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Schema { .. } => 2,
        Error::Resource { .. } => 3,
        _ => 1,
    }
}

pub fn main_with(args: Args) -> i32 {
    if let Some(n) = args.workers {
        // the global pool can only be built once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    if args.validate {
        return match run::validate_file(&args.spec) {
            Ok(()) => {
                println!("{}: ok", args.spec.display());
                0
            }
            Err(e) => {
                eprintln!("{}: {e}", args.spec.display());
                exit_code(&e)
            }
        };
    }
    match run::run_file(&args.spec, &args.out, args.budget_nodes) {
        Ok(w) => {
            for m in &w.warnings {
                eprintln!("warning: {m}");
            }
            for m in &w.failures {
                eprintln!("assertion failed: {m}");
            }
            println!("{}", w.csv.display());
            println!("{}", w.json.display());
            if w.failures.is_empty() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("{}: {e}", args.spec.display());
            exit_code(&e)
        }
    }
}
