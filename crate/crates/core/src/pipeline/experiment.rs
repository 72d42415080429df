//! End-to-end flows: dataset preparation, training, denoising, compression
//! sweeps and energy profiles.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{validate_layer_subset, DataSource, ExperimentConfig};
use super::data::{gen_synthetic, ingest_csv};
use crate::autoencoder::{
    cost, init_params, predict, train_from, Checkpoint, EpochStats, NetworkParams,
};
use crate::error::{Error, Result};
use crate::linalg::{exact_svd, Matrix};
use crate::rsvd::{compress_at_ratio, energy_profile};
use crate::seeds;
use crate::signal::{add_gaussian_noise, fragment, reassemble, MetricReport, Normalizer, Signal};
use crate::tchebichef::TchebichefBasis;

/// Salt separating sweep compression seeds from training recompression.
const SWEEP_SALT: u64 = 0x5EE9;

#[derive(Debug, Clone, PartialEq)]
pub struct TestSignal {
    pub clean: Signal<f64>,
    pub noisy: Signal<f64>,
}

/// Normalized moment matrices (one fragment per row) and the held-out signals.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub frag_len: usize,
    pub normalizer: Normalizer,
    pub train_inputs: Matrix<f64>,
    pub train_targets: Matrix<f64>,
    pub train_signals: usize,
    pub test: Vec<TestSignal>,
}

pub fn load_clean_signals(cfg: &ExperimentConfig) -> Result<Vec<Signal<f64>>> {
    match &cfg.data_source {
        DataSource::Synthetic { n_signals, length } => {
            gen_synthetic(*n_signals, *length, cfg.training.seed)
        }
        DataSource::Csv { path } => ingest_csv(path),
    }
}

/// Row-per-fragment moment matrix of one signal.
fn signal_moments(basis: &TchebichefBasis<f64>, x: &Signal<f64>) -> Result<Matrix<f64>> {
    let n = basis.length();
    let frags = fragment(x, n);
    if frags.is_empty() {
        return Err(Error::dim(format!(
            "signal of {} samples is shorter than frag_len {n}",
            x.len()
        )));
    }
    let rows = Matrix::from_fn(frags.len(), n, |i, j| frags[i][j]);
    basis.forward_batch(&rows)
}

fn stack(parts: &[Matrix<f64>]) -> Matrix<f64> {
    let cols = parts.first().map_or(0, |m| m.ncols());
    let rows: usize = parts.iter().map(|m| m.nrows()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut at = 0;
    for m in parts {
        out.rows_mut(at, m.nrows()).copy_from(m);
        at += m.nrows();
    }
    out
}

/// Adds noise (signal `i` uses seed `mix(seed, i)`), fragments, transforms at
/// full order, fits the normalizer on every clean and noisy fragment, and
/// splits by signal: the leading `train_split` share trains, the rest tests.
pub fn prepare_dataset(cfg: &ExperimentConfig, clean: Vec<Signal<f64>>) -> Result<PreparedData> {
    cfg.validate()?;
    let n = clean.len();
    if n < 2 {
        return Err(Error::Config(format!(
            "need at least 2 signals for a train/test split, got {n}"
        )));
    }
    let n_train = ((cfg.train_split * n as f64).round() as usize).clamp(1, n - 1);
    let basis = TchebichefBasis::<f64>::cached(cfg.frag_len, cfg.frag_len)?;

    let noisy = clean
        .iter()
        .enumerate()
        .map(|(i, x)| add_gaussian_noise(x, cfg.sigma, seeds::mix(cfg.training.seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let clean_m = clean
        .iter()
        .map(|x| signal_moments(&basis, x))
        .collect::<Result<Vec<_>>>()?;
    let noisy_m = noisy
        .iter()
        .map(|y| signal_moments(&basis, y))
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<&Matrix<f64>> = clean_m.iter().chain(&noisy_m).collect();
    let normalizer = Normalizer::fit(cfg.normalization, &all)?;

    let train_inputs = normalizer.apply(&stack(&noisy_m[..n_train]))?;
    let train_targets = normalizer.apply(&stack(&clean_m[..n_train]))?;
    let test = clean
        .into_iter()
        .zip(noisy)
        .skip(n_train)
        .map(|(clean, noisy)| TestSignal { clean, noisy })
        .collect();
    Ok(PreparedData {
        frag_len: cfg.frag_len,
        normalizer,
        train_inputs,
        train_targets,
        train_signals: n_train,
        test,
    })
}

/// Sidecar metadata stored next to a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub frag_len: usize,
    pub normalizer: Normalizer,
    pub config: ExperimentConfig,
    pub train_fragments: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub checkpoint: Checkpoint<f64>,
    pub meta: ModelMeta,
}

impl TrainedModel {
    pub fn params(&self) -> &NetworkParams<f64> {
        &self.checkpoint.params
    }

    pub fn alpha(&self) -> f64 {
        self.checkpoint.alpha.get()
    }

    pub fn file_stem(&self) -> String {
        format!("model_alpha_{}", self.alpha())
    }

    /// Writes `<stem>.fcae` and `<stem>.json` into `dir`; returns the checkpoint path.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(format!("{}.fcae", self.file_stem()));
        self.checkpoint.save(&path)?;
        let sidecar = path.with_extension("json");
        let json =
            serde_json::to_string_pretty(&self.meta).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(&sidecar, json + "\n").map_err(|e| Error::io(&sidecar, e))?;
        Ok(path)
    }

    /// Reads a checkpoint and the `.json` sidecar beside it.
    pub fn load(path: &Path) -> Result<Self> {
        let checkpoint = Checkpoint::load(path)?;
        let sidecar = path.with_extension("json");
        let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let meta: ModelMeta = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", sidecar.display())))?;
        let model = Self { checkpoint, meta };
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        let n_in = self.params().spec.n_in;
        if n_in != self.meta.frag_len {
            return Err(Error::Config(format!(
                "checkpoint expects {n_in} moments but frag_len is {}",
                self.meta.frag_len
            )));
        }
        if let Normalizer::PerFeature { bounds } = &self.meta.normalizer {
            if bounds.len() != n_in {
                return Err(Error::Config(format!(
                    "normalizer has {} features, checkpoint expects {n_in}",
                    bounds.len()
                )));
            }
        }
        Ok(())
    }
}

fn full_cost(params: &NetworkParams<f64>, data: &PreparedData, lambda: f64) -> Result<f64> {
    cost(
        &predict(params, &data.train_inputs)?,
        &data.train_targets,
        params,
        lambda,
    )
}

/// Trains on the prepared split (noisy moments → clean moments).
pub fn run_training(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    on_epoch: impl FnMut(EpochStats),
) -> Result<TrainedModel> {
    cfg.validate()?;
    if data.frag_len != cfg.frag_len {
        return Err(Error::Config(format!(
            "data was prepared with frag_len {}, config has {}",
            data.frag_len, cfg.frag_len
        )));
    }
    let t = &cfg.training;
    let init = init_params(t.layer_spec, t.seed)?;
    let initial_loss = full_cost(&init, data, t.lambda)?;
    let params = train_from(init, &data.train_inputs, &data.train_targets, t, on_epoch)?;
    let final_loss = full_cost(&params, data, t.lambda)?;
    Ok(TrainedModel {
        checkpoint: Checkpoint {
            alpha: t.alpha,
            params,
        },
        meta: ModelMeta {
            frag_len: cfg.frag_len,
            normalizer: data.normalizer.clone(),
            config: cfg.clone(),
            train_fragments: data.train_inputs.nrows(),
            initial_loss,
            final_loss,
        },
    })
}

/// Generates or loads the data named by `cfg`, trains, and saves into
/// `cfg.output_dir`.
pub fn train_to_disk(
    cfg: &ExperimentConfig,
    on_epoch: impl FnMut(EpochStats),
) -> Result<(TrainedModel, PathBuf)> {
    let data = prepare_dataset(cfg, load_clean_signals(cfg)?)?;
    let model = run_training(cfg, &data, on_epoch)?;
    let path = model.save(&cfg.output_dir)?;
    Ok((model, path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Denoised {
    pub signal: Signal<f64>,
    /// Against the clean reference truncated to the same length.
    pub report: Option<MetricReport>,
}

/// Denoising plumbing with a pluggable predictor. `predict(i, moments)` maps
/// the normalized noisy moments of signal `i` (one fragment per row) to
/// normalized clean-moment estimates of the same shape.
pub fn denoise_with(
    frag_len: usize,
    normalizer: &Normalizer,
    noisy: &[Signal<f64>],
    clean: Option<&[Signal<f64>]>,
    mut predict: impl FnMut(usize, &Matrix<f64>) -> Result<Matrix<f64>>,
) -> Result<Vec<Denoised>> {
    if let Some(c) = clean {
        if c.len() != noisy.len() {
            return Err(Error::dim(format!(
                "{} noisy signals but {} references",
                noisy.len(),
                c.len()
            )));
        }
    }
    let basis = TchebichefBasis::<f64>::cached(frag_len, frag_len)?;
    noisy
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let moments = normalizer.apply(&signal_moments(&basis, y)?)?;
            let estimate = predict(i, &moments)?;
            if estimate.shape() != moments.shape() {
                return Err(Error::dim(format!(
                    "predictor returned {:?} for input {:?}",
                    estimate.shape(),
                    moments.shape()
                )));
            }
            let samples = basis.inverse_batch(&normalizer.invert(&estimate)?)?;
            let frags: Vec<Vec<f64>> = samples
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect();
            let signal = reassemble(&frags, y.sample_rate_hz)?;
            let report = match clean {
                Some(c) => {
                    if c[i].len() != y.len() {
                        return Err(Error::dim(format!(
                            "signal {i}: reference has {} samples, noisy input {}",
                            c[i].len(),
                            y.len()
                        )));
                    }
                    Some(MetricReport::new(
                        &c[i].samples[..signal.len()],
                        &signal.samples,
                    )?)
                }
                None => None,
            };
            Ok(Denoised { signal, report })
        })
        .collect()
}

/// Denoises with the model's own weights.
pub fn run_denoise(
    model: &TrainedModel,
    noisy: &[Signal<f64>],
    clean: Option<&[Signal<f64>]>,
) -> Result<Vec<Denoised>> {
    denoise_params(model, model.params(), noisy, clean)
}

fn denoise_params(
    model: &TrainedModel,
    params: &NetworkParams<f64>,
    noisy: &[Signal<f64>],
    clean: Option<&[Signal<f64>]>,
) -> Result<Vec<Denoised>> {
    model.check()?;
    denoise_with(
        model.meta.frag_len,
        &model.meta.normalizer,
        noisy,
        clean,
        |_, m| predict(params, m),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub mean_input_snr_db: f64,
    pub mean_snr_db: f64,
    pub mean_prd_pct: f64,
    pub n_signals: usize,
}

/// Mean per-signal metrics of `params` over the test signals.
pub fn evaluate(
    model: &TrainedModel,
    params: &NetworkParams<f64>,
    test: &[TestSignal],
) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let noisy: Vec<Signal<f64>> = test.iter().map(|t| t.noisy.clone()).collect();
    let clean: Vec<Signal<f64>> = test.iter().map(|t| t.clean.clone()).collect();
    let out = denoise_params(model, params, &noisy, Some(&clean))?;
    let n = test.len() as f64;
    let mut input = 0.0;
    for t in test {
        let len = (t.noisy.len() / model.meta.frag_len) * model.meta.frag_len;
        input += MetricReport::new(&t.clean.samples[..len], &t.noisy.samples[..len])?.snr_db;
    }
    let reports: Vec<MetricReport> = out.iter().filter_map(|d| d.report).collect();
    Ok(Evaluation {
        mean_input_snr_db: input / n,
        mean_snr_db: reports.iter().map(|r| r.snr_db).sum::<f64>() / n,
        mean_prd_pct: reports.iter().map(|r| r.prd_pct).sum::<f64>() / n,
        n_signals: test.len(),
    })
}

/// Copy of `params` with the listed (1-based) layers compressed at `c_r`.
pub fn compress_layers(
    params: &NetworkParams<f64>,
    c_r: f64,
    layers: &[usize],
    power_iters: usize,
    seed: u64,
) -> Result<NetworkParams<f64>> {
    validate_layer_subset(layers)?;
    let mut out = params.clone();
    let base = seeds::mix(seeds::mix(seed, seeds::STREAM_RSVD), SWEEP_SALT);
    for &l in layers {
        out.weights[l - 1] = compress_at_ratio(
            &params.weights[l - 1],
            c_r,
            power_iters,
            seeds::mix(base, l as u64),
        )?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub alpha: f64,
    pub c_r: f64,
    pub layers: Vec<usize>,
    pub mean_snr_db: f64,
    pub mean_prd_pct: f64,
    pub n_signals: usize,
}

pub struct SweepPlan<'a> {
    pub alphas: &'a [f64],
    pub ratios: &'a [f64],
    pub layer_subsets: &'a [Vec<usize>],
    pub power_iters: usize,
    pub seed: u64,
}

/// One cell per `(α, layer subset, C_R)`, in that nesting order. Each α must
/// be served by one of `models`. Cells are evaluated in parallel on the
/// current rayon pool; results do not depend on the thread count.
pub fn run_sweep(
    models: &[TrainedModel],
    test: &[TestSignal],
    plan: &SweepPlan<'_>,
) -> Result<Vec<SweepCell>> {
    if plan.alphas.is_empty() || plan.ratios.is_empty() || plan.layer_subsets.is_empty() {
        return Err(Error::Config(
            "sweep needs at least one alpha, ratio and layer subset".into(),
        ));
    }
    if let Some(r) = plan.ratios.iter().find(|r| !(**r >= 0.0 && **r < 1.0)) {
        return Err(Error::Config(format!(
            "compression ratio {r} outside [0, 1)"
        )));
    }
    for s in plan.layer_subsets {
        validate_layer_subset(s)?;
    }
    let mut jobs = Vec::new();
    for &alpha in plan.alphas {
        let model = models
            .iter()
            .find(|m| (m.alpha() - alpha).abs() < 1e-12)
            .ok_or_else(|| Error::Config(format!("no checkpoint trained at alpha = {alpha}")))?;
        for subset in plan.layer_subsets {
            for &c_r in plan.ratios {
                jobs.push((model, alpha, subset, c_r));
            }
        }
    }
    jobs.par_iter()
        .map(|&(model, alpha, subset, c_r)| {
            let params = compress_layers(model.params(), c_r, subset, plan.power_iters, plan.seed)?;
            let eval = evaluate(model, &params, test)?;
            Ok(SweepCell {
                alpha,
                c_r,
                layers: subset.clone(),
                mean_snr_db: eval.mean_snr_db,
                mean_prd_pct: eval.mean_prd_pct,
                n_signals: eval.n_signals,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerEnergy {
    /// 1-based layer index.
    pub layer: usize,
    /// `(F_s, E)` for every retained rank `1..=rank`.
    pub points: Vec<(f64, f64)>,
}

impl LayerEnergy {
    /// Smallest singular-value fraction at which `E ≥ threshold`.
    pub fn fraction_reaching(&self, threshold: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|(_, e)| *e >= threshold)
            .map(|(f, _)| *f)
    }
}

/// Energy profile of every weight matrix from its exact singular values.
pub fn energy_profiles(params: &NetworkParams<f64>) -> Vec<LayerEnergy> {
    params
        .weights
        .iter()
        .enumerate()
        .map(|(l, w)| LayerEnergy {
            layer: l + 1,
            points: energy_profile(&exact_svd(w).s),
        })
        .collect()
}
