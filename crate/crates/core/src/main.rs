use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tactile_transfer::harness::{
    build_test_set, generate_groups, load_config, read_result, report, run_experiment, write_result, HarnessError,
    LoadedConfig, Mode,
};

#[derive(Parser)]
#[command(name = "tactile-lab", version, about = "Simulated tactile object learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write result.json, curves.csv, summary.json and config.json
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed_offset: Option<u64>,
        #[arg(long)]
        mode: Option<Mode>,
        /// concurrent trials
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Build the test set of a config and print its size per (object, action)
    Testset {
        config: PathBuf,
        #[arg(long)]
        seed_offset: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate curves, summary and config from a result.json
    Report {
        result: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a config and print its hash
    Validate {
        config: PathBuf,
        #[arg(long)]
        seed_offset: Option<u64>,
        #[arg(long)]
        mode: Option<Mode>,
    },
    /// Write one config per random group of prior objects
    GenGroups {
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// candidate prior ids; defaults to every catalog object that is not new
        #[arg(long, value_delimiter = ',')]
        pool: Option<Vec<u32>>,
        #[arg(long, default_value = "groups")]
        out: PathBuf,
    },
}

fn load(path: &Path, seed_offset: Option<u64>, mode: Option<Mode>) -> Result<LoadedConfig, HarnessError> {
    let mut loaded = load_config(path)?;
    loaded.config = loaded.config.with_overrides(seed_offset, mode);
    loaded.validate()?;
    Ok(loaded)
}

fn io_err(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed_offset,
            mode,
            jobs,
        } => {
            let loaded = load(&config, seed_offset, mode)?;
            let result = run_experiment(&loaded, jobs)?;
            write_result(&result, &out)?;
            report(&result, &out)?;
            for (arm, curve) in &result.mean_curves {
                eprintln!(
                    "{arm}: first {:.4} last {:.4} over {} points",
                    curve.first().copied().unwrap_or(f64::NAN),
                    curve.last().copied().unwrap_or(f64::NAN),
                    curve.len()
                );
            }
            eprintln!(
                "{} trials, {} failed, {:.1} s, written to {}",
                result.trials.len(),
                result.failures,
                result.wall_clock_s,
                out.display()
            );
            for t in result.trials.iter().filter(|t| t.failed()) {
                let msg = t.error.clone().or_else(|| t.arms.iter().find_map(|a| a.error.clone()));
                eprintln!("trial {} failed: {}", t.seed, msg.unwrap_or_default());
            }
            Ok(if result.failures > 0 { ExitCode::from(3) } else { ExitCode::SUCCESS })
        }
        Command::Testset { config, seed_offset, out } => {
            let loaded = load(&config, seed_offset, None)?;
            let mut per_seed = Vec::new();
            for seed in &loaded.config.seeds {
                let set = build_test_set(&loaded, *seed)?;
                let pairs: Vec<serde_json::Value> = set
                    .pairs
                    .iter()
                    .map(|p| serde_json::json!({"object": p.object, "action": p.action, "count": p.traces.len()}))
                    .collect();
                per_seed.push(serde_json::json!({"seed": seed, "total": set.len(), "pairs": pairs}));
            }
            let doc = serde_json::json!({
                "config_hash": loaded.config.hash(),
                "size_per_trial": loaded.config.test_set_size(),
                "trials": per_seed,
            });
            let text = serde_json::to_string_pretty(&doc).expect("json") + "\n";
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
                    let path = dir.join("testset.json");
                    std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
                }
                None => print!("{text}"),
            }
            println!("test set size per trial: {}", loaded.config.test_set_size());
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { result, out } => {
            let r = read_result(&result)?;
            report(&r, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate {
            config,
            seed_offset,
            mode,
        } => {
            let loaded = load(&config, seed_offset, mode)?;
            println!("ok {}", loaded.config.hash());
            Ok(ExitCode::SUCCESS)
        }
        Command::GenGroups {
            config,
            count,
            size,
            seed,
            pool,
            out,
        } => {
            let mut loaded = load(&config, None, None)?;
            let pool = pool.unwrap_or_else(|| loaded.catalog.objects.iter().map(|o| o.id).collect());
            let catalog = std::fs::canonicalize(&loaded.catalog_path).map_err(|e| io_err(&loaded.catalog_path, e))?;
            loaded.config.catalog = catalog.to_string_lossy().into_owned();
            let configs = generate_groups(&loaded.config, &pool, count, size, seed)?;
            std::fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
            for (i, c) in configs.iter().enumerate() {
                let path = out.join(format!("group_{i:02}.json"));
                let text = serde_json::to_string_pretty(c).expect("json") + "\n";
                std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
                println!("{} priors {:?}", path.display(), c.prior_objects);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
