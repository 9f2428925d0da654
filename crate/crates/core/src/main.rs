use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aelasso::exec::ExecMode;
use aelasso::experiment::{
    compare_models, run_experiment_with, synthetic_sweep_configs, write_synthetic_bundle, ExperimentConfig,
};
use aelasso::synthetic::SyntheticSpec;
use aelasso::{Error, Result};

#[derive(Parser)]
#[command(name = "aelasso", version, about = "Autoencoder-regularized sparse logistic regression with bootstrap stability evaluation")]
struct Cli {
    /// Run bootstrap fits on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/validation/augmentation cohorts, a group graph and
    /// one config per model.
    GenSynthetic {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Bootstrap count written into the generated configs.
        #[arg(long, default_value_t = 50)]
        bootstraps: usize,
    },
    /// Run one experiment and write its report.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run several experiments on shared data and tabulate them.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        /// Directory for comparison.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn read_spec(path: &Path) -> Result<SyntheticSpec> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn gen_synthetic(spec_path: &Path, out: &Path, bootstraps: usize) -> Result<()> {
    let spec = read_spec(spec_path)?;
    write_synthetic_bundle(&spec, out)?;
    let config_dir = out.join("configs");
    fs::create_dir_all(&config_dir).map_err(|source| Error::Io {
        path: config_dir.clone(),
        source,
    })?;
    for cfg in synthetic_sweep_configs(Path::new(".."), &spec, bootstraps) {
        cfg.save(&config_dir.join(format!("{}.json", cfg.model)))?;
    }
    println!("wrote cohorts, graph and {} configs to {}", aelasso::models::ModelKind::ALL.len(), out.display());
    Ok(())
}

fn run(config: &Path, mode: ExecMode) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let r = run_experiment_with(&cfg, mode)?;
    let ci = r
        .ci_curve
        .iter()
        .map(|p| format!("k={}:{:.4}", p.k, p.mean_ci))
        .collect::<Vec<_>>()
        .join(" ");
    println!(
        "{}: mean CI {ci}; AUC {:.4}; selected {}/{}; |SNR|≥{} in top {}: {}",
        r.model_tag,
        r.validation_auc,
        r.selected_count,
        r.feature_names.len(),
        r.snr_threshold,
        r.snr_top.len(),
        r.snr_above_count
    );
    println!("report written to {}", cfg.output_dir.display());
    Ok(())
}

fn compare(configs: &[PathBuf], out: &Path, mode: ExecMode) -> Result<()> {
    let cfgs = configs
        .iter()
        .map(|p| ExperimentConfig::load(p))
        .collect::<Result<Vec<_>>>()?;
    let table = compare_models(&cfgs, mode)?;
    fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let path = out.join("comparison.csv");
    table.write_csv(&path)?;
    println!("{} models compared; table written to {}", table.rows.len(), path.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mode = if cli.sequential {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    };
    let result = match &cli.command {
        Command::GenSynthetic { spec, out, bootstraps } => gen_synthetic(spec, out, *bootstraps),
        Command::Run { config } => run(config, mode),
        Command::Compare { configs, out } => compare(configs, out, mode),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
