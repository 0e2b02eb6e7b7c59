use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dputil::config::{ExperimentConfig, MechanismSettings};
use dputil::ingest::write_csv;
use dputil::persist::{load_private_model, save_private_model};
use dputil::plots::{aggregate, emit_plots, Metric};
use dputil::results::{read_results, write_results, RESULTS_FILE};
use dputil::sweep::{load_dataset, run_sweep, SeedContext};
use dputil::{HarnessError, Result, OUT_DIR_ENV};
use dputil_core::dataset::{synthesize, SyntheticSpec};
use dputil_core::mechanisms::MechanismKind;
use dputil_core::metrics::MetricRow;

#[derive(Parser)]
#[command(name = "dputil", version, about = "Privacy/utility sweeps for differentially private training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic Gaussian-blob dataset as CSV.
    Synth {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        classes: usize,
        #[arg(long, default_value_t = 4.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "label")]
        label_column: String,
        /// Destination file.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run every (mechanism, epsilon, seed) cell of a config.
    Sweep {
        config: PathBuf,
        /// Replace the config's seed list (repeatable).
        #[arg(long)]
        seed: Vec<u64>,
        /// Output directory; overrides the config and $DPUTIL_OUT_DIR.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Train one private model and save it.
    Train {
        config: PathBuf,
        #[arg(long)]
        mechanism: String,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Mount the membership attack on a saved private model.
    Attack {
        model: PathBuf,
        config: PathBuf,
        /// Split seed; defaults to the config's first seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Plot a results directory and print a summary table.
    Report {
        results_dir: PathBuf,
        /// Where to write plots; defaults to the results directory.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth { n, d, classes, separation, seed, label_column, out } => {
            let spec = SyntheticSpec { n, d, class_count: classes, class_separation: separation, seed };
            write_csv(&synthesize(&spec)?, &out, &label_column)?;
            println!("wrote {n} rows to {}", out.display());
            Ok(())
        }
        Command::Sweep { config, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if !seed.is_empty() {
                cfg.seeds = seed;
            }
            let dir = output_dir(out, &cfg);
            let result = run_sweep(&cfg)?;
            write_results(&result, &dir)?;
            let failed = result.meta.failures.len();
            println!(
                "{} rows ({} failed) in {:.1}s -> {}",
                result.rows.len(),
                failed,
                result.meta.wall_time_secs,
                dir.join(RESULTS_FILE).display()
            );
            for f in &result.meta.failures {
                eprintln!("failed: {} eps={} seed={}: {}", f.mechanism.as_str(), f.epsilon, f.seed, f.error);
            }
            Ok(())
        }
        Command::Train { config, mechanism, epsilon, seed, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let settings = settings_for(&cfg, &mechanism)?;
            let data = load_dataset(&cfg)?;
            let ctx = SeedContext::prepare(&cfg, &data, seed.unwrap_or(cfg.seeds[0]))?;
            let model = ctx.fit(&settings, epsilon)?;
            save_private_model(&model, &out)?;
            println!("saved {} model (epsilon {epsilon}) to {}", mechanism, out.display());
            Ok(())
        }
        Command::Attack { model, config, seed } => {
            let cfg = ExperimentConfig::load(&config)?;
            let private = load_private_model(&model)?;
            let data = load_dataset(&cfg)?;
            let ctx = SeedContext::prepare(&cfg, &data, seed.unwrap_or(cfg.seeds[0]))?;
            let (acc, outcome) = ctx.assess(&private, "cli")?;
            let row = MetricRow::compute(ctx.acc_nonprivate, acc, &outcome)?;
            println!("acc_nonprivate   {:.4}", row.acc_nonprivate);
            println!("acc_private      {:.4}", row.acc_private);
            println!("utility_loss     {:.4}", row.utility_loss);
            println!("tpr / fpr        {:.4} / {:.4}", row.tpr, row.fpr);
            println!("privacy_leakage  {:.4}", row.privacy_leakage);
            println!("true_revealed    {} of {}", row.true_revealed, row.n_members);
            Ok(())
        }
        Command::Report { results_dir, out } => {
            let result = read_results(&results_dir)?;
            let dir = out.unwrap_or_else(|| results_dir.clone());
            let svgs = emit_plots(&result, &dir)?;
            let mut text = summary(&result);
            for svg in svgs {
                let _ = writeln!(text, "wrote {}", svg.display());
            }
            emit(&text)
        }
    }
}

fn output_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| Path::new("dputil-out").to_path_buf())
}

fn settings_for(cfg: &ExperimentConfig, name: &str) -> Result<MechanismSettings> {
    let kind = MechanismKind::parse(name)
        .ok_or_else(|| HarnessError::Config(format!("unknown mechanism `{name}`")))?;
    Ok(cfg
        .mechanism_settings()
        .into_iter()
        .find(|s| s.kind == kind)
        .unwrap_or_else(|| MechanismSettings::new(kind)))
}

fn summary(result: &dputil::results::SweepResult) -> String {
    let (dataset, arch) = (&result.meta.dataset, result.meta.arch);
    let mut out = String::new();
    let _ = writeln!(out, "{dataset} / {}", arch.as_str());
    let _ = writeln!(
        out,
        "{:<12} {:>10} {:>22} {:>22} {:>18}",
        "mechanism", "epsilon", "utility_loss", "privacy_leakage", "true_revealed"
    );
    let loss = aggregate(result, dataset, arch, Metric::UtilityLoss);
    let leak = aggregate(result, dataset, arch, Metric::PrivacyLeakage);
    let revealed = aggregate(result, dataset, arch, Metric::TrueRevealed);
    for ((kind, l), ((_, p), (_, r))) in loss.iter().zip(leak.iter().zip(&revealed)) {
        for ((a, b), c) in l.iter().zip(p).zip(r) {
            let _ = writeln!(
                out,
                "{:<12} {:>10.0e} {:>10.4} ± {:<9.4} {:>10.4} ± {:<9.4} {:>8.1} ± {:<7.1}",
                kind.as_str(),
                a.epsilon,
                a.stats.mean,
                a.stats.std,
                b.stats.mean,
                b.stats.std,
                c.stats.mean,
                c.stats.std
            );
        }
    }
    out
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(HarnessError::Io { path: "<stdout>".into(), source: e }),
        _ => Ok(()),
    }
}
