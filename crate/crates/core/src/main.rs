use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fcae::autoencoder::Checkpoint;
use fcae::pipeline::config::{validate_layer_subset, ExperimentConfig};
use fcae::pipeline::data::{gen_synthetic, ingest_csv, write_csv};
use fcae::pipeline::report::emit_report;
use fcae::pipeline::{
    energy_profiles, evaluate, load_clean_signals, prepare_dataset, run_denoise, run_sweep,
    run_training, SweepPlan, TrainedModel,
};
use fcae::signal::add_gaussian_noise;
use fcae::{seeds, FractionalOrder, Signal};

/// Tchebichef-moment denoising autoencoder with fractional training and
/// RSVD weight compression.
#[derive(Parser)]
#[command(name = "fcae", version)]
struct Cli {
    /// Worker threads for sweeps (1 = strictly sequential).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic clean signals (and optionally a noisy copy) as CSV.
    Gen {
        #[arg(long, default_value_t = 40)]
        n_signals: usize,
        #[arg(long, default_value_t = 2500)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Clean CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Also write a noisy copy here.
        #[arg(long)]
        noisy: Option<PathBuf>,
        #[arg(long, default_value_t = 15.0)]
        sigma: f64,
    },
    /// Train a model and write `model_alpha_<α>.fcae` plus its JSON sidecar.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Denoise a CSV of signals with a trained model.
    Denoise {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Clean references for SNR/PRD, row-aligned with `--input`.
        #[arg(long)]
        clean: Option<PathBuf>,
        /// Denoised CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate compressed weights over ratios and layer subsets.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Trained model; repeat once per α.
        #[arg(long = "checkpoint", required = true)]
        checkpoints: Vec<PathBuf>,
        /// Comma-separated α values to sweep (default: config, else every checkpoint).
        #[arg(long)]
        alpha: Option<String>,
        /// Comma-separated compression ratios.
        #[arg(long)]
        ratios: Option<String>,
        /// Layer subsets, e.g. `1,2,3;1,2,3,4`.
        #[arg(long)]
        layers: Option<String>,
    },
    /// Write the energy profile (E against F_s) of every weight matrix.
    Energy {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a checkpoint header.
    Inspect {
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| anyhow::anyhow!("bad {what} {t:?}"))
        })
        .collect()
}

fn parse_subsets(text: &str) -> Result<Vec<Vec<usize>>> {
    let subsets = text
        .split(';')
        .map(|s| parse_list::<usize>(s, "layer index"))
        .collect::<Result<Vec<_>>>()?;
    for s in &subsets {
        validate_layer_subset(s)?;
    }
    Ok(subsets)
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.training.seed = s;
    }
    if let Some(s) = common.sigma {
        cfg.sigma = s;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn read_signals(path: &Path) -> Result<Vec<Signal<f64>>> {
    ingest_csv(path).with_context(|| format!("reading {}", path.display()))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    match cli.command {
        Command::Gen {
            n_signals,
            length,
            seed,
            out,
            noisy,
            sigma,
        } => {
            let clean = gen_synthetic(n_signals, length, seed)?;
            write_csv(&out, &clean)?;
            if let Some(path) = noisy {
                let noisy = clean
                    .iter()
                    .enumerate()
                    .map(|(i, x)| add_gaussian_noise(x, sigma, seeds::mix(seed, i as u64)))
                    .collect::<fcae::Result<Vec<_>>>()?;
                write_csv(&path, &noisy)?;
            }
            println!("wrote {n_signals} signals of {length} samples");
        }
        Command::Train { common, alpha } => {
            let mut cfg = load_config(&common)?;
            if let Some(a) = alpha {
                cfg.training.alpha = FractionalOrder::new(a)?;
            }
            cfg.validate()?;
            let data = prepare_dataset(&cfg, load_clean_signals(&cfg)?)?;
            let report_every = (cfg.training.epochs / 10).max(1);
            let model = run_training(&cfg, &data, |s| {
                if s.epoch % report_every == 0 || s.epoch == 1 {
                    eprintln!(
                        "epoch {:>5}  loss {:.6e}{}",
                        s.epoch,
                        s.loss,
                        if s.recompressed {
                            "  (recompressed)"
                        } else {
                            ""
                        }
                    );
                }
            })?;
            let path = model.save(&cfg.output_dir)?;
            let eval = evaluate(&model, model.params(), &data.test)?;
            println!("checkpoint      {}", path.display());
            println!(
                "loss            {:.6e} -> {:.6e}",
                model.meta.initial_loss, model.meta.final_loss
            );
            println!(
                "test signals    {}  input SNR {:.3} dB  output SNR {:.3} dB  PRD {:.3} %",
                eval.n_signals, eval.mean_input_snr_db, eval.mean_snr_db, eval.mean_prd_pct
            );
        }
        Command::Denoise {
            checkpoint,
            input,
            clean,
            out,
        } => {
            let model = TrainedModel::load(&checkpoint)?;
            let noisy = read_signals(&input)?;
            let clean = clean.as_deref().map(read_signals).transpose()?;
            let results = run_denoise(&model, &noisy, clean.as_deref())?;
            let signals: Vec<Signal<f64>> = results.iter().map(|d| d.signal.clone()).collect();
            write_csv(&out, &signals)?;
            for (i, d) in results.iter().enumerate() {
                if let Some(r) = d.report {
                    println!(
                        "signal {i:>4}  SNR {:.4} dB  PRD {:.4} %",
                        r.snr_db, r.prd_pct
                    );
                }
            }
            println!(
                "wrote {} denoised signals to {}",
                results.len(),
                out.display()
            );
        }
        Command::Sweep {
            common,
            checkpoints,
            alpha,
            ratios,
            layers,
        } => {
            let models = checkpoints
                .iter()
                .map(|p| TrainedModel::load(p).with_context(|| format!("loading {}", p.display())))
                .collect::<Result<Vec<_>>>()?;
            let mut cfg = match &common.config {
                Some(_) => load_config(&common)?,
                None => {
                    let mut c = models[0].meta.config.clone();
                    if let Some(o) = &common.out {
                        c.output_dir = o.clone();
                    }
                    c
                }
            };
            if let Some(s) = common.seed {
                cfg.training.seed = s;
            }
            if let Some(s) = common.sigma {
                cfg.sigma = s;
            }
            let alphas = match (&alpha, &common.config) {
                (Some(a), _) => parse_list::<f64>(a, "alpha")?,
                (None, Some(_)) => cfg.sweep_alphas.clone(),
                (None, None) => models.iter().map(TrainedModel::alpha).collect(),
            };
            let ratios = match &ratios {
                Some(r) => parse_list::<f64>(r, "ratio")?,
                None => cfg.sweep_ratios.clone(),
            };
            let subsets = match &layers {
                Some(l) => parse_subsets(l)?,
                None => vec![cfg.layer_subset.clone()],
            };
            let data = prepare_dataset(&cfg, load_clean_signals(&cfg)?)?;
            let plan = SweepPlan {
                alphas: &alphas,
                ratios: &ratios,
                layer_subsets: &subsets,
                power_iters: cfg.training.rsvd_iters,
                seed: cfg.training.seed,
            };
            let cells = run_sweep(&models, &data.test, &plan)?;
            for c in &cells {
                println!(
                    "alpha {:<5} C_R {:<5} layers {:<8} SNR {:>8.3} dB  PRD {:>8.3} %",
                    c.alpha,
                    c.c_r,
                    fcae::pipeline::report::format_layers(&c.layers),
                    c.mean_snr_db,
                    c.mean_prd_pct
                );
            }
            for p in emit_report(&cells, &[], &cfg.output_dir)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Energy { checkpoint, out } => {
            let ck = Checkpoint::<f64>::load(&checkpoint)?;
            let profiles = energy_profiles(&ck.params);
            for p in &profiles {
                match p.fraction_reaching(0.9) {
                    Some(f) => println!("W{}: E >= 0.9 at F_s = {f:.4}", p.layer),
                    None => println!("W{}: E never reaches 0.9", p.layer),
                }
            }
            for p in emit_report(&[], &profiles, &out)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Inspect { checkpoint } => {
            let ck = Checkpoint::<f64>::load(&checkpoint)?;
            let spec = ck.params.spec;
            println!("format   FCAE1");
            println!("N        {}", spec.n_in);
            println!("N_h      {}", spec.n_hidden);
            println!("N_e      {}", spec.n_bottleneck);
            println!("alpha    {}", ck.alpha);
            println!("layers   {}", ck.params.weights.len());
            for (l, (w, b)) in ck.params.weights.iter().zip(&ck.params.biases).enumerate() {
                println!(
                    "W{}       {}x{}  |W|_F {:.6e}  bias len {}",
                    l + 1,
                    w.nrows(),
                    w.ncols(),
                    w.norm(),
                    b.len()
                );
            }
        }
    }
    Ok(())
}
