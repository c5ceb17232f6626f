use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use stemge::bayes::BayesParams;
use stemge::config::ExperimentSpec;
use stemge::pipeline::{cmd_compare, cmd_features, cmd_report, cmd_run, FeatureMode, FeaturesOptions};
use stemge::Error;

const EXIT_PARTIAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "stemge", version, about = "Evolved classifiers for imbalanced diagnostic data")]
struct Cli {
    /// Upper bound on worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Whole,
    Segments,
}

#[derive(Subcommand)]
enum Command {
    /// Extract 52 texture features per image listed in a manifest.
    Features {
        manifest: PathBuf,
        #[arg(long, default_value_t = stemge::glcm::DEFAULT_LEVELS)]
        levels: usize,
        #[arg(long, default_value_t = stemge::glcm::DEFAULT_OVERLAP)]
        overlap: f64,
        #[arg(long, default_value_t = stemge::glcm::DEFAULT_MEDIAN_WINDOW)]
        median_window: usize,
        #[arg(long, value_enum, default_value_t = Mode::Whole)]
        mode: Mode,
        /// Keep only manifest rows with this view tag.
        #[arg(long)]
        view: Option<String>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run every configured method of an experiment spec.
    Run {
        spec: PathBuf,
        /// Override the spec's base_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Pairwise Bayesian comparison of GE results per setup.
    Compare {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50_000)]
        samples: usize,
        /// Cumulative score CSV.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Concatenate the per-setup summary tables.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::UnknownMethod(_)
            | Error::InvalidGeConfig(_)
            | Error::InvalidAugmentConfig(_)
            | Error::GrammarSyntax { .. }
            | Error::DepthInfeasible { .. }
    )
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if is_config_error(&e) { EXIT_CONFIG } else { EXIT_PARTIAL })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    match cli.command {
        Command::Features { manifest, levels, overlap, median_window, mode, view, out } => {
            let opts = FeaturesOptions {
                levels,
                overlap,
                median_window,
                mode: match mode {
                    Mode::Whole => FeatureMode::Whole,
                    Mode::Segments => FeatureMode::Segments,
                },
                view,
            };
            match cmd_features(&manifest, &opts, &out) {
                Ok(o) => {
                    for p in &o.written {
                        println!("wrote {}", p.display());
                    }
                    for (p, e) in &o.failures {
                        eprintln!("failed {}: {e}", p.display());
                    }
                    if o.failures.is_empty() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_PARTIAL)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Run { spec, seed } => {
            let mut spec = match ExperimentSpec::load(&spec) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            if let Some(seed) = seed {
                spec.base_seed = seed;
            }
            match cmd_run(&spec) {
                Ok(o) => {
                    println!("results in {}", o.setup_dir.display());
                    let failed = o.failed();
                    for m in &failed {
                        eprintln!("cell {} failed", m.name());
                    }
                    if failed.is_empty() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_PARTIAL)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Compare { dirs, seed, samples, out } => {
            let params = BayesParams { seed, n_mc: samples, ..BayesParams::default() };
            match cmd_compare(&dirs, &params, out.as_deref()) {
                Ok(o) => {
                    for (name, score) in &o.cumulative {
                        println!("{name}\t{score}/{}", o.max_score);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Report { dirs, out } => match cmd_report(&dirs, &out) {
            Ok(n) => {
                println!("wrote {n} rows to {}", out.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
