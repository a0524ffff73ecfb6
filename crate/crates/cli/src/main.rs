mod config;
mod output;
mod selector;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use anyhow::{Context, Result};
use clap::Parser;

use config::{Config, Task};

/// Runs spin-lace symmetry and dynamics experiments from a TOML config.
#[derive(Parser, Debug)]
#[command(version)]
struct Args {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for disorder and random-state sampling; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the parallel engines (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// verify, search, evolve, respond, spectrum or full-fig3; overrides `task`.
    #[arg(long)]
    task: Option<Task>,
}

const CORETYPE: &str = "OPENBLAS_CORETYPE";

/// Some OpenBLAS builds select a kernel that returns wrong results on
/// AVX-512 machines. The kernel is chosen when the library loads, so on a
/// failed self-check rerun this process with a known-good one pinned.
fn rerun_with_pinned_kernel() -> Result<Option<ExitCode>> {
    let Err(err) = spinlace_core::linalg::backend_self_check() else {
        return Ok(None);
    };
    if std::env::var_os(CORETYPE).is_some() {
        return Err(err).context("linear algebra backend");
    }
    eprintln!("warning: {err}; retrying with {CORETYPE}=Haswell");
    let status = Command::new(std::env::current_exe()?)
        .args(std::env::args_os().skip(1))
        .env(CORETYPE, "Haswell")
        .status()
        .context("re-running with a pinned BLAS kernel")?;
    Ok(Some(ExitCode::from(
        status.code().unwrap_or(1).clamp(0, 255) as u8,
    )))
}

fn run(args: Args) -> Result<bool> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("--threads")?;
    }
    let cfg = Config::load(&args.config)?;
    let base_dir = args.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let resolved = cfg
        .resolve(&base_dir, args.task, args.seed, args.out)
        .with_context(|| format!("in {}", args.config.display()))?;
    println!(
        "model: R = {}, L = {}, node fields {:?}, double fields {:?}, couplings {:?}, {} defects",
        resolved.spec.plaquettes,
        resolved.spec.n_sites(),
        resolved.spec.node_fields,
        resolved.spec.double_fields,
        resolved.spec.couplings,
        resolved.spec.defects.len()
    );
    let outcome = tasks::run(&resolved, &base_dir)?;
    let stamp = output::Stamp::from_resolved(&resolved);
    output::write_all(&resolved.output, &resolved, &stamp, &outcome.artifacts)?;
    print!("{}", outcome.summary);
    println!(
        "wrote {} files and manifest.toml to {} (config hash {})",
        outcome.artifacts.len(),
        resolved.output.display(),
        &stamp.config_hash[..16]
    );
    Ok(outcome.ok)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match rerun_with_pinned_kernel() {
        Ok(Some(code)) => return code,
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    }
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
