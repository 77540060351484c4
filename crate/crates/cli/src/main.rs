use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use entro_cli::config::{self, ExperimentConfig};
use entro_cli::output::{to_csv, write_atomic};
use entro_cli::run::{run_batch, run_bundle, run_entry};
use entro_cli::verify::verify_entry;
use entro_cli::{exit_code, EXIT_OK, EXIT_VERDICT};
use entro_core::coding::{Alpha, CodingSystem};
use entro_core::gallery::{self, GalleryParams};
use entro_core::{Error, Result};

#[derive(Parser)]
#[command(name = "entro", version, about = "Numerical topological entropy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the estimators of a config file (single experiment or batch).
    Estimate { config: PathBuf },
    /// Run a named gallery example with its built-in plans.
    Gallery {
        /// One of the gallery names, e.g. doubling, crumple, annulus-disc.
        name: String,
        /// Builder parameters as JSON, e.g. '{"N": 3}'.
        #[arg(long)]
        params: Option<String>,
        /// Write the counts CSV here.
        #[arg(long)]
        counts: Option<PathBuf>,
    },
    /// Run the verifier suites of a config file.
    Verify { config: PathBuf },
    /// Word complexity of the coded two-interval exchange, as CSV.
    Coding {
        /// Rotation number in (0, 1), or "golden".
        #[arg(long, default_value = "golden")]
        alpha: String,
        #[arg(long, default_value_t = 20)]
        lmax: usize,
        #[arg(long, default_value_t = 1)]
        seeds: usize,
        #[arg(long, default_value_t = 100_000)]
        orbit_len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match configure_threads().and_then(|()| dispatch(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("ENTRO_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::Config(format!("ENTRO_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("ENTRO_THREADS: {e}")))
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Estimate { config } => {
            let configs = config::load(&config)?;
            let results = run_batch(&configs, run_entry);
            finish(&configs, results, |r| (r.report.clone(), r.verdict_failed()))
        }
        Command::Verify { config } => {
            let configs = config::load(&config)?;
            let results = run_batch(&configs, verify_entry);
            finish(&configs, results, |r| (r.report.clone(), !r.passed()))
        }
        Command::Gallery { name, params, counts } => {
            let params: GalleryParams = match params {
                Some(text) => serde_json::from_str(&text).map_err(|e| Error::Config(format!("params: {e}")))?,
                None => GalleryParams::default(),
            };
            let b = gallery::by_name(&name, &params)?;
            let wanted = [
                config::EstimatorKind::Bd,
                config::EstimatorKind::Compacta,
                config::EstimatorKind::Friedland,
            ];
            let r = run_bundle(&b, &wanted, &b.name)?;
            if let Some(path) = counts {
                write_atomic(&path, &to_csv(&r.rows)?)?;
            }
            print!("{}", r.report);
            Ok(if r.verdict_failed() { EXIT_VERDICT } else { EXIT_OK })
        }
        Command::Coding {
            alpha,
            lmax,
            seeds,
            orbit_len,
            seed,
            out,
        } => {
            let alpha = if alpha == "golden" {
                Alpha::golden()
            } else {
                let a: f64 = alpha
                    .parse()
                    .map_err(|_| Error::Config(format!("alpha: expected a number or \"golden\", got {alpha:?}")))?;
                Alpha::from_f64(a)?
            };
            let mut sys = CodingSystem::new(alpha);
            let c = sys.word_complexity(lmax, seeds, orbit_len, seed)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Io(e.to_string());
            w.write_record(["L", "p"]).map_err(io)?;
            for (l, p) in c.p.iter().enumerate() {
                w.write_record([(l + 1).to_string(), p.to_string()]).map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
            match out {
                Some(path) => write_atomic(&path, &bytes)?,
                None => std::io::stdout().write_all(&bytes)?,
            }
            eprintln!(
                "alpha = {}/{}; word-complexity growth over L in [{}, {}] (coded-entropy surrogate) = {:.6} nats; {} of {} seeds skipped",
                alpha.num,
                alpha.den,
                lmax / 2,
                lmax,
                c.entropy,
                c.skipped,
                seeds
            );
            Ok(EXIT_OK)
        }
    }
}

/// Prints every block in config order and picks the exit status: the first
/// error's, else 3 when some verdict failed.
fn finish<T>(
    configs: &[ExperimentConfig],
    results: Vec<Result<T>>,
    summarize: impl Fn(&T) -> (String, bool),
) -> Result<i32> {
    let mut code = EXIT_OK;
    let mut first_error: Option<i32> = None;
    for (i, (cfg, r)) in configs.iter().zip(results).enumerate() {
        match r {
            Ok(r) => {
                let (report, failed) = summarize(&r);
                print!("{report}");
                if failed {
                    code = EXIT_VERDICT;
                }
            }
            Err(e) => {
                eprintln!("{e} (entry {i}: {})", cfg.system.name);
                first_error.get_or_insert(exit_code(&e));
            }
        }
    }
    Ok(first_error.unwrap_or(code))
}
