use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use colltur::config::ExperimentConfig;
use colltur::{output, presets, sweep, thread_count, THREADS_ENV};

#[derive(Parser)]
#[command(name = "colltur", version, about = "Parameter sweeps for the driven-qubit collision model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file or a bundled preset.
    Run {
        /// Path to a TOML config, or the name of a bundled preset.
        config: String,
        /// Write results here instead of the config's output path.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a config without running it.
    Validate { config: String },
    /// List the bundled presets.
    ListPresets {
        /// Print each preset's full TOML.
        #[arg(long)]
        verbose: bool,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_PHYSICS: u8 = 2;

fn load(config: &str) -> Result<(String, ExperimentConfig), String> {
    let text = if Path::new(config).exists() {
        std::fs::read_to_string(config).map_err(|e| format!("{config}: {e}"))?
    } else if let Some(t) = presets::get(config) {
        t.to_owned()
    } else {
        return Err(format!("{config}: no such file or preset"));
    };
    let cfg = ExperimentConfig::parse(&text).map_err(|e| format!("{config}: {e}"))?;
    Ok((text, cfg))
}

fn run(config: &str, output: Option<PathBuf>) -> Result<ExitCode, String> {
    let (text, cfg) = load(config)?;
    let path = output.unwrap_or_else(|| cfg.output.path.clone());
    let threads = thread_count(cfg.threads, std::env::var(THREADS_ENV).ok().as_deref());
    // Fail on an unwritable path before spending time on the sweep.
    std::fs::File::create(&path).map_err(|e| format!("output.path {}: {e}", path.display()))?;
    let start = Instant::now();
    let rows = sweep::run(&cfg, threads);
    let wall = start.elapsed();
    output::write_results(&path, &cfg, &rows).map_err(|e| format!("{}: {e}", path.display()))?;
    let meta = output::Metadata::new(&text, &cfg, &rows, threads, wall);
    let side = output::sidecar_path(&path);
    meta.write(&side).map_err(|e| format!("{}: {e}", side.display()))?;
    eprintln!(
        "{} rows ({} failed) -> {} in {:.2}s",
        meta.rows,
        meta.failed_rows,
        path.display(),
        meta.wall_time_s
    );
    for r in rows.iter().filter(|r| r.message.is_some()) {
        eprintln!("  {:?} t={:?}: {}", r.point, r.t, r.message.as_deref().unwrap_or_default());
    }
    Ok(if meta.failed_rows > 0 { ExitCode::from(EXIT_PHYSICS) } else { ExitCode::SUCCESS })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output } => run(&config, output),
        Command::Validate { config } => load(&config).map(|(_, cfg)| {
            println!("ok: mode {}, {} grid points", cfg.mode.name(), cfg.grid().len());
            ExitCode::SUCCESS
        }),
        Command::ListPresets { verbose } => {
            for (name, text) in presets::PRESETS {
                let cfg = ExperimentConfig::parse(text).expect("bundled presets are valid");
                println!("{name:<12} {}", cfg.description.unwrap_or_default());
                if verbose {
                    println!("{text}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}
