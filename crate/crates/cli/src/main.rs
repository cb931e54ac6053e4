use std::path::PathBuf;
use std::process::ExitCode;

use bscatter_cli::{exit_code, Manifest, RunConfig, EXIT_FAIL, EXIT_USAGE};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bscatter", version, about = "Numerical experiments for scattering of Δ² + V on ℝ³")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments of a config file.
    Run {
        config: PathBuf,
        /// Output directory; defaults to the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, env = "BSCATTER_THREADS")]
        threads: Option<usize>,
    },
    /// Rebuild report.md and the figures from a manifest.
    Report { manifest: PathBuf },
}

fn summarize(m: &Manifest) -> ExitCode {
    for f in m.failures() {
        eprintln!("FAIL {f}");
    }
    let passed = m.checks.iter().filter(|c| c.pass).count();
    eprintln!("{passed}/{} checks passed", m.checks.len());
    ExitCode::from(exit_code(m) as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match cli.command {
        Command::Run { config, out, threads } => {
            let cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_USAGE as u8);
                }
            };
            if let Some(n) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_USAGE as u8);
                }
            }
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            match bscatter_cli::run(&cfg, &out) {
                Ok(m) => summarize(&m),
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(EXIT_FAIL as u8)
                }
            }
        }
        Command::Report { manifest } => match bscatter_cli::report(&manifest) {
            Ok(m) => summarize(&m),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_USAGE as u8)
            }
        },
    }
}
