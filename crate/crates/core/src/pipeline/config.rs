//! Flat TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::autoencoder::{LayerSpec, Preset, TrainingConfig, LAYERS};
use crate::error::{Error, Result};
use crate::fractional::FractionalOrder;
use crate::signal::NormalizationMode;

pub const DEFAULT_SIGMA: f64 = 15.0;
pub const DEFAULT_FRAG_LEN: usize = 250;
pub const DEFAULT_TRAIN_SPLIT: f64 = 0.7;
pub const DEFAULT_N_SIGNALS: usize = 40;
pub const DEFAULT_SIGNAL_LENGTH: usize = 2500;

/// Where the clean signals come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Synthetic { n_signals: usize, length: usize },
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data_source: DataSource,
    pub sigma: f64,
    pub frag_len: usize,
    pub train_split: f64,
    pub normalization: NormalizationMode,
    pub training: TrainingConfig,
    pub sweep_alphas: Vec<f64>,
    pub sweep_ratios: Vec<f64>,
    /// 1-based indices of the layers compressed during a sweep.
    pub layer_subset: Vec<usize>,
    pub output_dir: PathBuf,
}

/// `0.5, 0.55, …, 0.95`.
pub fn default_ratios() -> Vec<f64> {
    (10..=19).map(|k| k as f64 / 20.0).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_preset(Preset::default())
    }
}

impl ExperimentConfig {
    pub fn from_preset(preset: Preset) -> Self {
        Self {
            data_source: DataSource::Synthetic {
                n_signals: DEFAULT_N_SIGNALS,
                length: DEFAULT_SIGNAL_LENGTH,
            },
            sigma: DEFAULT_SIGMA,
            frag_len: DEFAULT_FRAG_LEN,
            train_split: DEFAULT_TRAIN_SPLIT,
            normalization: NormalizationMode::default(),
            training: TrainingConfig::preset(preset),
            sweep_alphas: vec![1.0],
            sweep_ratios: default_ratios(),
            layer_subset: (1..=LAYERS).collect(),
            output_dir: PathBuf::from("out"),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.resolve()
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Replaces the network width to follow `frag_len` (full-order moments)
    /// with the default 3/5 and 3/10 hidden proportions.
    pub fn set_frag_len(&mut self, frag_len: usize) -> Result<()> {
        self.frag_len = frag_len;
        self.training.layer_spec = default_layer_spec(frag_len)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.training.validate()?;
        match &self.data_source {
            DataSource::Synthetic { n_signals, length } => {
                if *n_signals == 0 {
                    return bad("n_signals must be at least 1".into());
                }
                if *length < self.frag_len {
                    return bad(format!(
                        "signal_length {length} is shorter than frag_len {}",
                        self.frag_len
                    ));
                }
            }
            DataSource::Csv { .. } => {}
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be ≥ 0, got {}", self.sigma));
        }
        if self.frag_len == 0 {
            return bad("frag_len must be at least 1".into());
        }
        if self.training.layer_spec.n_in != self.frag_len {
            return bad(format!(
                "network input width {} differs from frag_len {}",
                self.training.layer_spec.n_in, self.frag_len
            ));
        }
        if !(self.train_split > 0.0 && self.train_split < 1.0) {
            return bad(format!(
                "train_split must lie in (0, 1), got {}",
                self.train_split
            ));
        }
        for &a in &self.sweep_alphas {
            FractionalOrder::new(a).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(r) = self
            .sweep_ratios
            .iter()
            .find(|r| !(**r >= 0.0 && **r < 1.0))
        {
            return bad(format!("compression ratio {r} outside [0, 1)"));
        }
        validate_layer_subset(&self.layer_subset)?;
        Ok(())
    }
}

pub fn validate_layer_subset(subset: &[usize]) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::Config("layer subset is empty".into()));
    }
    for (i, &l) in subset.iter().enumerate() {
        if !(1..=LAYERS).contains(&l) {
            return Err(Error::Config(format!(
                "layer index {l} outside 1..={LAYERS}"
            )));
        }
        if subset[..i].contains(&l) {
            return Err(Error::Config(format!("layer index {l} repeated")));
        }
    }
    Ok(())
}

fn default_layer_spec(n: usize) -> Result<LayerSpec> {
    if n == DEFAULT_FRAG_LEN {
        return Ok(LayerSpec::default());
    }
    LayerSpec::new(n, (3 * n).div_ceil(5), (3 * n).div_ceil(10))
}

/// On-disk shape: every key optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    preset: Option<Preset>,
    /// `"synthetic"` or a CSV path.
    data_source: Option<String>,
    n_signals: Option<usize>,
    signal_length: Option<usize>,
    sigma: Option<f64>,
    frag_len: Option<usize>,
    train_split: Option<f64>,
    normalization: Option<NormalizationMode>,
    alpha: Option<f64>,
    eta: Option<f64>,
    lambda: Option<f64>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    recompress_every: Option<usize>,
    energy_fraction: Option<f64>,
    eps_clamp: Option<f64>,
    rsvd_iters: Option<usize>,
    seed: Option<u64>,
    n_hidden: Option<usize>,
    n_bottleneck: Option<usize>,
    sweep_alphas: Option<Vec<f64>>,
    sweep_ratios: Option<Vec<f64>>,
    layer_subset: Option<Vec<usize>>,
    output_dir: Option<PathBuf>,
}

impl ConfigFile {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::from_preset(self.preset.unwrap_or_default());
        if let Some(n) = self.frag_len {
            cfg.set_frag_len(n)?;
        }
        let (mut n_signals, mut length) = (DEFAULT_N_SIGNALS, DEFAULT_SIGNAL_LENGTH);
        if let Some(n) = self.n_signals {
            n_signals = n;
        }
        if let Some(l) = self.signal_length {
            length = l;
        }
        cfg.data_source = match self.data_source.as_deref() {
            None | Some("synthetic") => DataSource::Synthetic { n_signals, length },
            Some(path) => {
                if self.n_signals.is_some() || self.signal_length.is_some() {
                    return Err(Error::Config(
                        "n_signals and signal_length only apply to synthetic data".into(),
                    ));
                }
                DataSource::Csv { path: path.into() }
            }
        };
        let t = &mut cfg.training;
        if let Some(a) = self.alpha {
            t.alpha = FractionalOrder::new(a).map_err(|e| Error::Config(e.to_string()))?;
        }
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src {
                    $dst = v;
                }
            };
        }
        set!(t.eta, self.eta);
        set!(t.lambda, self.lambda);
        set!(t.epochs, self.epochs);
        set!(t.batch_size, self.batch_size);
        set!(t.recompress_every, self.recompress_every);
        set!(t.energy_fraction, self.energy_fraction);
        set!(t.eps_clamp, self.eps_clamp);
        set!(t.rsvd_iters, self.rsvd_iters);
        set!(t.seed, self.seed);
        if self.n_hidden.is_some() || self.n_bottleneck.is_some() {
            t.layer_spec = LayerSpec::new(
                cfg.frag_len,
                self.n_hidden.unwrap_or(t.layer_spec.n_hidden),
                self.n_bottleneck.unwrap_or(t.layer_spec.n_bottleneck),
            )?;
        }
        set!(cfg.sigma, self.sigma);
        set!(cfg.train_split, self.train_split);
        set!(cfg.normalization, self.normalization);
        set!(cfg.sweep_alphas, self.sweep_alphas);
        set!(cfg.sweep_ratios, self.sweep_ratios);
        set!(cfg.layer_subset, self.layer_subset);
        set!(cfg.output_dir, self.output_dir);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.sigma, 15.0);
        assert_eq!(cfg.frag_len, 250);
        assert_eq!(cfg.train_split, 0.7);
        assert_eq!(cfg.layer_subset, vec![1, 2, 3, 4]);
        assert_eq!(cfg.sweep_ratios.len(), 10);
        assert!((cfg.sweep_ratios[9] - 0.95).abs() < 1e-12);
    }

    #[test]
    fn keys_override_preset() {
        let cfg = ExperimentConfig::from_toml_str(
            "preset = \"motor\"\nalpha = 1.6\nseed = 9\nn_signals = 10\nsignal_length = 500\n\
             sweep_ratios = [0.0, 0.5]\nlayer_subset = [1, 2, 3]\nnormalization = \"per_feature\"\n",
        )
        .unwrap();
        assert_eq!(cfg.training.batch_size, 1024);
        assert_eq!(cfg.training.alpha.get(), 1.6);
        assert_eq!(cfg.training.seed, 9);
        assert_eq!(
            cfg.data_source,
            DataSource::Synthetic {
                n_signals: 10,
                length: 500
            }
        );
        assert_eq!(cfg.layer_subset, vec![1, 2, 3]);
        assert_eq!(cfg.normalization, NormalizationMode::PerFeature);
    }

    #[test]
    fn frag_len_resizes_network() {
        let cfg = ExperimentConfig::from_toml_str("frag_len = 20\nsignal_length = 100\n").unwrap();
        assert_eq!(cfg.training.layer_spec, LayerSpec::new(20, 12, 6).unwrap());
        let cfg =
            ExperimentConfig::from_toml_str("frag_len = 16\nn_hidden = 8\nn_bottleneck = 4\n")
                .unwrap();
        assert_eq!(cfg.training.layer_spec, LayerSpec::new(16, 8, 4).unwrap());
    }

    #[test]
    fn csv_source() {
        let cfg = ExperimentConfig::from_toml_str("data_source = \"data/eeg.csv\"").unwrap();
        assert_eq!(
            cfg.data_source,
            DataSource::Csv {
                path: "data/eeg.csv".into()
            }
        );
        assert!(ExperimentConfig::from_toml_str("data_source = \"x.csv\"\nn_signals = 3").is_err());
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "unknown_key = 1",
            "train_split = 1.0",
            "train_split = 0.0",
            "alpha = 2.0",
            "sweep_alphas = [0.5]",
            "sweep_ratios = [1.0]",
            "layer_subset = []",
            "layer_subset = [0]",
            "layer_subset = [1, 1]",
            "sigma = -1.0",
            "signal_length = 100",
            "n_bottleneck = 200",
            "epochs = \"many\"",
        ] {
            assert!(
                matches!(
                    ExperimentConfig::from_toml_str(text),
                    Err(Error::Config(_) | Error::LayerSpec(_))
                ),
                "{text}"
            );
        }
    }
}
