//! `hgcl`: batch front end for training, evaluation, noise analysis, synthetic data and
//! robustness sweeps. Every subcommand reads one JSON run config and writes JSON/CSV files.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hgcl::encoders::{save_checkpoint, Variant};
use hgcl::evaluation::{ablation_run, evaluate_multiseed, EvalConfig, EvalReport};
use hgcl::graph::save_dataset;
use hgcl::noise::{analyze, aggregation_geometry_sweep, uniform_angle_grid};
use hgcl::robustness::robustness_sweep;
use hgcl::training::{train_variant, ModelInputs, TrainConfig};
use hgcl::Error;
use log::info;

use config::{DatasetSource, RunConfig};

#[derive(Parser)]
#[command(name = "hgcl", version, about = "GCN-MLP contrastive learning and noise analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Use this single seed instead of the configured seed list. For `synth` it sets the
    /// generator seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for seed-level parallelism.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Train the GCN-MLP model once; writes model.ckpt and loss.csv.
    Train,
    /// Multi-seed linear evaluation with β selection; writes eval_report.json.
    Eval,
    /// Run the evaluation protocol for encoder pairings; writes ablation.json and ablation.csv.
    Ablate {
        /// Only this pairing (default: the config's `variants`).
        #[arg(long)]
        variant: Option<Variant>,
    },
    /// Noise and structural-noise analysis; writes noise_report.json and CSV tables.
    Analyze,
    /// Generate a synthetic dataset and write it in the on-disk format.
    Synth,
    /// Random edge-insertion sweep in the evasion setting; writes robustness.csv and .json.
    Attack,
    /// Grid over hidden width and GCN depth; writes sweep.csv and sweep.json.
    Sweep,
}

/// A failed run: exit code plus message.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub const CONFIG: u8 = 2;
    pub const DATA: u8 = 3;
    pub const NUMERICAL: u8 = 4;

    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: Self::CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) => Failure::CONFIG,
            Error::NonFinite(_) => Failure::NUMERICAL,
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::Io { .. }
            | Error::CapExceeded { .. }
            | Error::AttackBudget { .. }
            | Error::Checkpoint(_)
            | Error::Json(_) => Failure::DATA,
            Error::Dimension { .. } | Error::StaleCache => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure {
        code: Failure::DATA,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    write_file(path, text)
}

fn eval_config(cfg: &RunConfig) -> EvalConfig {
    EvalConfig {
        train: cfg.train,
        probe: cfg.probe,
        beta: cfg.beta.clone(),
    }
}

fn log_report(r: &EvalReport) {
    info!("{}: mean {:.4} std {:.4} over {} seeds", r.variant, r.mean, r.std, r.seeds.len());
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::config("--config is required"))?;
    let mut cfg = RunConfig::read(path)?;
    if cli.jobs == 0 {
        return Err(Failure::config("--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
        .map_err(|e| Failure::config(e.to_string()))?;
    if let Some(seed) = cli.seed {
        match (&mut cfg.dataset, cli.command) {
            (DatasetSource::Synthetic(s), Command::Synth) => s.seed = seed,
            _ => cfg.seeds = vec![seed],
        }
    }
    cfg.validate()?;
    let out = cfg.output_dir(cli.out.as_deref())?;

    if let Command::Synth = cli.command {
        let DatasetSource::Synthetic(_) = cfg.dataset else {
            return Err(Failure::config("synth needs a \"synthetic\" dataset source"));
        };
        let ds = cfg.dataset.load()?;
        save_dataset(&ds, &out)?;
        info!("wrote {} nodes, {} edges to {}", ds.num_nodes(), ds.graph.num_edges(), out.display());
        return Ok(());
    }

    let ds = cfg.dataset.load()?;
    info!(
        "dataset: {} nodes, {} edges, {} features, {} classes, {} splits",
        ds.num_nodes(),
        ds.graph.num_edges(),
        ds.feature_dim(),
        ds.num_classes,
        ds.splits.len()
    );
    let eval = eval_config(&cfg);

    match cli.command {
        Command::Train => {
            let train = TrainConfig {
                seed: cfg.seeds[0],
                ..cfg.train
            };
            let trained = train_variant(&ModelInputs::new(&ds, &train), &train, Variant::GcnMlp)?;
            save_checkpoint(&trained.model, &out.join("model.ckpt"))?;
            trained.trace.write_csv(&out.join("loss.csv"))?;
            info!(
                "loss {:.6} -> {:.6} over {} epochs",
                trained.trace.losses[0],
                trained.trace.losses[trained.trace.len() - 1],
                trained.trace.len()
            );
        }
        Command::Eval => {
            let report = evaluate_multiseed(&ds, &eval, &cfg.seeds)?;
            log_report(&report);
            write_json(&out.join("eval_report.json"), &report)?;
        }
        Command::Ablate { variant } => {
            let variants = variant.map_or(cfg.variants.clone(), |v| vec![v]);
            let mut reports = Vec::new();
            let mut csv = String::from("variant,mean_acc,std_acc\n");
            for v in variants {
                let r = ablation_run(&ds, v, &eval, &cfg.seeds)?;
                log_report(&r);
                writeln!(csv, "{},{:?},{:?}", r.variant, r.mean, r.std).unwrap();
                reports.push(r);
            }
            write_json(&out.join("ablation.json"), &reports)?;
            write_file(&out.join("ablation.csv"), csv)?;
        }
        Command::Analyze => {
            let report = analyze(&ds, &cfg.analysis)?;
            let trend: Vec<String> = report.ek.iter().map(|e| format!("{e:.4}")).collect();
            info!("E_k for k = 0..{}: {}", cfg.analysis.k_max, trend.join(", "));
            if report.ek.windows(2).all(|w| w[1] <= w[0]) {
                info!("E_k is non-increasing in k on this dataset");
            } else {
                info!("E_k is not monotone in k on this dataset");
            }
            report.write(&out)?;
            let mut csv = String::from("angle,cosine,norm_of_sum\n");
            for row in aggregation_geometry_sweep(1.0, 1.0, &uniform_angle_grid(100))? {
                writeln!(csv, "{:?},{:?},{:?}", row.angle, row.cosine, row.norm_of_sum).unwrap();
            }
            write_file(&out.join("geometry.csv"), csv)?;
        }
        Command::Attack => {
            let report = robustness_sweep(&ds, &eval, &cfg.attack.variants, &cfg.attack.rates, &cfg.seeds)?;
            for row in &report.rows {
                info!("{} rate {:.2}: {:.4} ± {:.4}", row.variant, row.rate, row.mean_acc, row.std_acc);
            }
            write_file(&out.join("robustness.csv"), report.to_csv())?;
            write_json(&out.join("robustness.json"), &report)?;
        }
        Command::Sweep => {
            let mut reports = Vec::new();
            let mut csv = String::from("hidden_dim,gcn_layers,mean_acc,std_acc\n");
            for &h in &cfg.sweep.hidden_dims {
                for &k in &cfg.sweep.gcn_layers {
                    let point = EvalConfig {
                        train: TrainConfig {
                            hidden_dim: h,
                            gcn_layers: k,
                            ..eval.train
                        },
                        ..eval.clone()
                    };
                    let r = evaluate_multiseed(&ds, &point, &cfg.seeds)?;
                    info!("hidden {h}, {k} GCN layers: {:.4} ± {:.4}", r.mean, r.std);
                    writeln!(csv, "{h},{k},{:?},{:?}", r.mean, r.std).unwrap();
                    reports.push(serde_json::json!({ "hidden_dim": h, "gcn_layers": k, "report": r }));
                }
            }
            write_json(&out.join("sweep.json"), &reports)?;
            write_file(&out.join("sweep.csv"), csv)?;
        }
        Command::Synth => unreachable!("handled above"),
    }
    info!("outputs in {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
