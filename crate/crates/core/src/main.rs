use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use estate_vision::commands;
use estate_vision::config::RunConfig;

/// Like `println!`, but a closed pipe (`| head`) is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(
    name = "estate-vision",
    version,
    about = "Listing image features and price / days-on-market models"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, default_value = "estate.toml")]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the feature table from listings, manifest, images and embeddings.
    Extract,
    /// Write toy embeddings for indoor images.
    Embed,
    /// Fit the configured model on the training split.
    Fit,
    /// Score the saved model on the train and test splits.
    Evaluate,
    /// Write gain importance as CSV and SVG.
    Importance,
    /// Write the names of the most important features.
    Select {
        /// Number of names; defaults to the configured value.
        #[arg(short)]
        n: Option<usize>,
    },
    /// Run the feature-combination experiment.
    Experiment,
}

fn run(cli: Cli) -> estate_vision::Result<()> {
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.sync_seeds();
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    if let Some(out) = cli.out {
        cfg.paths.out = out;
    }
    match cli.command {
        Command::Extract => {
            let s = commands::cmd_extract(&cfg)?;
            say!(
                "{} listings, {} images, {} errors -> {}",
                s.listings,
                s.images,
                s.errors.len(),
                s.table.display()
            );
        }
        Command::Embed => say!("{}", commands::cmd_embed(&cfg)?.display()),
        Command::Fit => {
            let m = commands::cmd_fit(&cfg)?;
            say!(
                "fitted {} for {} on {} features",
                m.choice,
                m.target,
                m.model.feature_names().len()
            );
        }
        Command::Evaluate => {
            let e = commands::cmd_evaluate(&cfg)?;
            say!("test MAE {:.4}, R² {:.4} (log scale)", e.test_mae, e.test_r_squared);
        }
        Command::Importance => {
            for (name, gain) in commands::cmd_importance(&cfg)?.iter().take(10) {
                say!("{name:>24} {gain:.4}");
            }
        }
        Command::Select { n } => {
            if let Some(n) = n {
                cfg.select.n = n;
            }
            for name in commands::cmd_select(&cfg)? {
                say!("{name}");
            }
        }
        Command::Experiment => {
            let _ = write!(std::io::stdout(), "{}", commands::cmd_experiment(&cfg)?.to_csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
