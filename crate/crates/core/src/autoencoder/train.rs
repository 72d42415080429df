use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{cost, forward, fractional_backward, init_params, sgd_step, LayerSpec, NetworkParams};
use crate::error::{Error, Result};
use crate::fractional::{FractionalOrder, DEFAULT_EPS_CLAMP};
use crate::linalg::Matrix;
use crate::rsvd::{compress_opt, DEFAULT_ENERGY_FRACTION, DEFAULT_POWER_ITERS};
use crate::seeds;
use crate::Scalar;

/// Named hyperparameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// 500 epochs, batch 2, η = 0.05, recompress every 90 epochs, ε = 1e-2.
    #[default]
    Desk,
    /// 3000 epochs, batch 256, η = 0.01, recompress every 200 epochs.
    Keirn,
    /// 500 epochs, batch 1024, η = 0.01, recompress every 50 epochs.
    Motor,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" | "default" => Ok(Preset::Desk),
            "keirn" => Ok(Preset::Keirn),
            "motor" => Ok(Preset::Motor),
            other => Err(Error::Config(format!("unknown preset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub alpha: FractionalOrder,
    pub eta: f64,
    pub lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs between optimized-rank recompressions of every weight; 0 disables.
    pub recompress_every: usize,
    pub energy_fraction: f64,
    pub rsvd_iters: usize,
    pub eps_clamp: f64,
    pub seed: u64,
    pub layer_spec: LayerSpec,
}

impl TrainingConfig {
    pub fn preset(preset: Preset) -> Self {
        let base = Self {
            alpha: FractionalOrder::INTEGER,
            eta: 0.01,
            lambda: 1e-6,
            epochs: 3000,
            batch_size: 256,
            recompress_every: 200,
            energy_fraction: DEFAULT_ENERGY_FRACTION,
            rsvd_iters: DEFAULT_POWER_ITERS,
            eps_clamp: DEFAULT_EPS_CLAMP,
            seed: 0,
            layer_spec: LayerSpec::default(),
        };
        match preset {
            Preset::Keirn => base,
            Preset::Motor => Self {
                epochs: 500,
                batch_size: 1024,
                recompress_every: 50,
                ..base
            },
            Preset::Desk => Self {
                eta: 0.05,
                epochs: 500,
                batch_size: 2,
                recompress_every: 90,
                eps_clamp: 1e-2,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.layer_spec.validate()?;
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be ≥ 0, got {}", self.lambda));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive".into());
        }
        if self.recompress_every > self.epochs {
            return bad(format!(
                "recompress_every ({}) exceeds epochs ({})",
                self.recompress_every, self.epochs
            ));
        }
        if !(self.energy_fraction > 0.0 && self.energy_fraction <= 1.0) {
            return bad(format!(
                "energy_fraction must lie in (0, 1], got {}",
                self.energy_fraction
            ));
        }
        if !(self.eps_clamp > 0.0) {
            return bad(format!(
                "eps_clamp must be positive, got {}",
                self.eps_clamp
            ));
        }
        if self.rsvd_iters == 0 {
            return bad("rsvd_iters must be at least 1".into());
        }
        Ok(())
    }
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self::preset(Preset::Desk)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Sample-weighted mean of the mini-batch costs seen during the epoch.
    pub loss: f64,
    pub recompressed: bool,
}

/// Trains from a fresh Glorot initialization drawn from `config.seed`.
pub fn train<T: Scalar>(
    inputs: &Matrix<T>,
    targets: &Matrix<T>,
    config: &TrainingConfig,
    on_epoch: impl FnMut(EpochStats),
) -> Result<NetworkParams<T>> {
    config.validate()?;
    let params = init_params(config.layer_spec, config.seed)?;
    train_from(params, inputs, targets, config, on_epoch)
}

/// Fractional mini-batch SGD with periodic optimized-rank RSVD compression.
pub fn train_from<T: Scalar>(
    mut params: NetworkParams<T>,
    inputs: &Matrix<T>,
    targets: &Matrix<T>,
    config: &TrainingConfig,
    mut on_epoch: impl FnMut(EpochStats),
) -> Result<NetworkParams<T>> {
    config.validate()?;
    params.validate()?;
    if inputs.shape() != targets.shape() {
        return Err(Error::dim(format!(
            "inputs {:?} vs targets {:?}",
            inputs.shape(),
            targets.shape()
        )));
    }
    if inputs.ncols() != params.spec.n_in {
        return Err(Error::dim(format!(
            "training rows have {} features, network expects {}",
            inputs.ncols(),
            params.spec.n_in
        )));
    }
    let samples = inputs.nrows();
    if samples == 0 {
        return Err(Error::EmptyDataset);
    }

    let eta = T::lit(config.eta);
    let lambda = T::lit(config.lambda);
    let eps = T::lit(config.eps_clamp);
    let mut shuffle_rng = seeds::stream(config.seed, seeds::STREAM_SHUFFLE);
    let rsvd_seed = seeds::mix(config.seed, seeds::STREAM_RSVD);
    let mut order: Vec<usize> = (0..samples).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut weighted = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let x = gather_rows(inputs, chunk);
            let y = gather_rows(targets, chunk);
            let cache = forward(&params, &x)?;
            let loss = cost(cache.output(), &y, &params, lambda)?.to_f64_lossless();
            weighted += loss * chunk.len() as f64;
            let grads = fractional_backward(&params, &cache, &y, config.alpha, lambda, eps)?;
            sgd_step(&mut params, &grads, eta);
        }
        let loss = weighted / samples as f64;
        if !loss.is_finite() || params.validate().is_err() {
            return Err(Error::Diverged { epoch, loss });
        }

        let recompressed = config.recompress_every > 0 && epoch % config.recompress_every == 0;
        if recompressed {
            for (l, w) in params.weights.iter_mut().enumerate() {
                let seed = seeds::mix(rsvd_seed, (epoch * super::LAYERS + l) as u64);
                *w = compress_opt(w, config.rsvd_iters, config.energy_fraction, seed)?;
            }
        }
        on_epoch(EpochStats {
            epoch,
            loss,
            recompressed,
        });
    }
    Ok(params)
}

fn gather_rows<T: Scalar>(m: &Matrix<T>, rows: &[usize]) -> Matrix<T> {
    Matrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}
