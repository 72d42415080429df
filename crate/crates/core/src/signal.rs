//! Signal-domain utilities: additive Gaussian noise, fragmenting,
//! min-max normalization of moment features and SNR/PRD metrics.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seeds;
use crate::Scalar;

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 250.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    pub samples: Vec<T>,
    pub sample_rate_hz: f64,
}

impl<T: Scalar> Signal<T> {
    pub fn new(samples: Vec<T>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter(
                "signal contains non-finite samples".into(),
            ));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Leading `n` samples.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            samples: self.samples[..n.min(self.samples.len())].to_vec(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

/// `y = x + ζ` with `ζ ~ N(0, σ²)` drawn from the noise stream of `seed`.
pub fn add_gaussian_noise<T: Scalar>(x: &Signal<T>, sigma: f64, seed: u64) -> Result<Signal<T>> {
    if !(sigma >= 0.0) {
        return Err(Error::Parameter(format!(
            "noise sigma must be ≥ 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(x.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Parameter(e.to_string()))?;
    let mut rng = seeds::stream(seed, seeds::STREAM_NOISE);
    let samples = x
        .samples
        .iter()
        .map(|&v| v + T::lit(normal.sample(&mut rng)))
        .collect();
    Ok(Signal {
        samples,
        sample_rate_hz: x.sample_rate_hz,
    })
}

/// Non-overlapping windows of `frag_len`; a short tail is dropped.
pub fn fragment<T: Scalar>(x: &Signal<T>, frag_len: usize) -> Vec<Vec<T>> {
    if frag_len == 0 {
        return Vec::new();
    }
    x.samples
        .chunks_exact(frag_len)
        .map(<[T]>::to_vec)
        .collect()
}

pub fn reassemble<T: Scalar>(fragments: &[Vec<T>], sample_rate_hz: f64) -> Result<Signal<T>> {
    let Some(first) = fragments.first() else {
        return Err(Error::EmptyDataset);
    };
    let len = first.len();
    if let Some((i, f)) = fragments.iter().enumerate().find(|(_, f)| f.len() != len) {
        return Err(Error::dim(format!(
            "fragment {i} has {} samples, expected {len}",
            f.len()
        )));
    }
    Ok(Signal {
        samples: fragments.concat(),
        sample_rate_hz,
    })
}

/// Global min-max bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormState {
    pub min_val: f64,
    pub max_val: f64,
}

impl NormState {
    pub fn fit<T: Scalar>(values: impl IntoIterator<Item = T>) -> Result<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut any = false;
        for v in values {
            let v = v.to_f64_lossless();
            lo = lo.min(v);
            hi = hi.max(v);
            any = true;
        }
        if !any {
            return Err(Error::EmptyDataset);
        }
        if !(hi > lo) {
            return Err(Error::DegenerateRange(lo));
        }
        Ok(Self {
            min_val: lo,
            max_val: hi,
        })
    }

    #[inline]
    pub fn apply<T: Scalar>(&self, v: T) -> T {
        (v - T::lit(self.min_val)) / T::lit(self.max_val - self.min_val)
    }

    #[inline]
    pub fn invert<T: Scalar>(&self, v: T) -> T {
        v * T::lit(self.max_val - self.min_val) + T::lit(self.min_val)
    }
}

/// Either one bound pair for the whole moment matrix or one per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Normalizer {
    Global(NormState),
    PerFeature { bounds: Vec<NormState> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    #[default]
    Global,
    PerFeature,
}

impl Normalizer {
    /// Fits bounds over every row of every given matrix.
    pub fn fit<T: Scalar>(mode: NormalizationMode, data: &[&Matrix<T>]) -> Result<Self> {
        match mode {
            NormalizationMode::Global => Ok(Normalizer::Global(NormState::fit(
                data.iter().flat_map(|m| m.iter().copied()),
            )?)),
            NormalizationMode::PerFeature => {
                let cols = data.first().map(|m| m.ncols()).ok_or(Error::EmptyDataset)?;
                if data.iter().any(|m| m.ncols() != cols) {
                    return Err(Error::dim("feature matrices disagree on width"));
                }
                let bounds = (0..cols)
                    .map(|j| {
                        NormState::fit(
                            data.iter()
                                .flat_map(|m| m.column(j).iter().copied().collect::<Vec<_>>()),
                        )
                    })
                    .collect::<Result<_>>()?;
                Ok(Normalizer::PerFeature { bounds })
            }
        }
    }

    fn bound(&self, col: usize) -> &NormState {
        match self {
            Normalizer::Global(s) => s,
            Normalizer::PerFeature { bounds } => &bounds[col],
        }
    }

    fn check_width(&self, cols: usize) -> Result<()> {
        match self {
            Normalizer::PerFeature { bounds } if bounds.len() != cols => Err(Error::dim(format!(
                "normalizer has {} features, data has {cols}",
                bounds.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Maps to the fitted `[0, 1]` range. Out-of-range values are not clipped.
    pub fn apply<T: Scalar>(&self, data: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_width(data.ncols())?;
        Ok(Matrix::from_fn(data.nrows(), data.ncols(), |i, j| {
            self.bound(j).apply(data[(i, j)])
        }))
    }

    pub fn invert<T: Scalar>(&self, data: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_width(data.ncols())?;
        Ok(Matrix::from_fn(data.nrows(), data.ncols(), |i, j| {
            self.bound(j).invert(data[(i, j)])
        }))
    }
}

pub fn fit_minmax<T: Scalar>(data: &Matrix<T>) -> Result<NormState> {
    NormState::fit(data.iter().copied())
}

pub fn apply_minmax<T: Scalar>(data: &Matrix<T>, state: &NormState) -> Matrix<T> {
    data.map(|v| state.apply(v))
}

pub fn invert_minmax<T: Scalar>(data: &Matrix<T>, state: &NormState) -> Matrix<T> {
    data.map(|v| state.invert(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub snr_db: f64,
    pub prd_pct: f64,
}

impl MetricReport {
    pub fn new<T: Scalar>(x: &[T], x_hat: &[T]) -> Result<Self> {
        let (signal, error) = energies(x, x_hat)?;
        Ok(Self {
            snr_db: snr_from_energies(signal, error),
            prd_pct: prd_from_energies(signal, error),
        })
    }
}

fn energies<T: Scalar>(x: &[T], x_hat: &[T]) -> Result<(f64, f64)> {
    if x.len() != x_hat.len() {
        return Err(Error::dim(format!(
            "reference has {} samples, estimate has {}",
            x.len(),
            x_hat.len()
        )));
    }
    let mut signal = 0.0;
    let mut error = 0.0;
    for (&a, &b) in x.iter().zip(x_hat) {
        let a = a.to_f64_lossless();
        let d = a - b.to_f64_lossless();
        signal += a * a;
        error += d * d;
    }
    if signal == 0.0 {
        return Err(Error::UndefinedReference);
    }
    Ok((signal, error))
}

fn snr_from_energies(signal: f64, error: f64) -> f64 {
    if error == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (signal / error).log10()
    }
}

fn prd_from_energies(signal: f64, error: f64) -> f64 {
    100.0 * (error / signal).sqrt()
}

/// `10·log10(Σx² / Σ(x − x̂)²)` in dB; `+∞` when `x̂ = x`.
pub fn snr<T: Scalar>(x: &[T], x_hat: &[T]) -> Result<f64> {
    let (s, e) = energies(x, x_hat)?;
    Ok(snr_from_energies(s, e))
}

/// `100·√(Σ(x − x̂)² / Σx²)` in percent.
pub fn prd<T: Scalar>(x: &[T], x_hat: &[T]) -> Result<f64> {
    let (s, e) = energies(x, x_hat)?;
    Ok(prd_from_energies(s, e))
}

/// PRD implied by an SNR value: `100·10^(−SNR/20)`.
pub fn prd_from_snr(snr_db: f64) -> f64 {
    100.0 * 10f64.powf(-snr_db / 20.0)
}

pub fn snr_from_prd(prd_pct: f64) -> f64 {
    -20.0 * (prd_pct / 100.0).log10()
}
