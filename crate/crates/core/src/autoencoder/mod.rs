//! Five-layer autoencoder `N → N_h → N_e → N_h → N` with linear hidden
//! activations and a sigmoid output, trained by fractional-order SGD.

mod checkpoint;
mod train;

pub use checkpoint::{Checkpoint, MAGIC};
pub use train::{train, train_from, EpochStats, Preset, TrainingConfig};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractional::{CaputoKernel, FractionalOrder};
use crate::linalg::{Matrix, Vector};
use crate::seeds;
use crate::Scalar;

/// Number of weighted layers.
pub const LAYERS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub n_in: usize,
    pub n_hidden: usize,
    pub n_bottleneck: usize,
}

impl LayerSpec {
    /// Requires `0 < n_bottleneck < n_hidden < n_in`.
    pub fn new(n_in: usize, n_hidden: usize, n_bottleneck: usize) -> Result<Self> {
        let spec = Self {
            n_in,
            n_hidden,
            n_bottleneck,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bottleneck == 0
            || self.n_bottleneck >= self.n_hidden
            || self.n_hidden >= self.n_in
        {
            return Err(Error::LayerSpec(format!(
                "need 0 < N_e < N_h < N, got N = {}, N_h = {}, N_e = {}",
                self.n_in, self.n_hidden, self.n_bottleneck
            )));
        }
        Ok(())
    }

    /// `(rows, cols)` of each weight matrix, i.e. `(fan_out, fan_in)`.
    pub fn weight_shapes(&self) -> [(usize, usize); LAYERS] {
        let (n, h, e) = (self.n_in, self.n_hidden, self.n_bottleneck);
        [(h, n), (e, h), (h, e), (n, h)]
    }
}

impl Default for LayerSpec {
    fn default() -> Self {
        Self {
            n_in: 250,
            n_hidden: 150,
            n_bottleneck: 75,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T: Scalar> {
    pub spec: LayerSpec,
    pub weights: [Matrix<T>; LAYERS],
    pub biases: [Vector<T>; LAYERS],
}

impl<T: Scalar> NetworkParams<T> {
    pub fn zeros(spec: LayerSpec) -> Self {
        let shapes = spec.weight_shapes();
        Self {
            spec,
            weights: shapes.map(|(r, c)| Matrix::zeros(r, c)),
            biases: shapes.map(|(r, _)| Vector::zeros(r)),
        }
    }

    /// Checks every shape against `self.spec` and that all entries are finite.
    pub fn validate(&self) -> Result<()> {
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let (r, c) = self.spec.weight_shapes()[l];
            if w.shape() != (r, c) || b.len() != r {
                return Err(Error::dim(format!(
                    "layer {} has W {:?} and B {}, expected W ({r}, {c}) and B {r}",
                    l + 1,
                    w.shape(),
                    b.len()
                )));
            }
            if w.iter().chain(b.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Parameter(format!(
                    "layer {} has non-finite entries",
                    l + 1
                )));
            }
        }
        Ok(())
    }

    pub fn squared_weight_norm(&self) -> T {
        self.weights
            .iter()
            .fold(T::zero(), |acc, w| acc + w.norm_squared())
    }

    /// Converts every entry to another scalar type.
    pub fn cast<U: Scalar>(&self) -> NetworkParams<U> {
        NetworkParams {
            spec: self.spec,
            weights: self
                .weights
                .each_ref()
                .map(|w| w.map(|v| U::lit(v.to_f64_lossless()))),
            biases: self
                .biases
                .each_ref()
                .map(|b| b.map(|v| U::lit(v.to_f64_lossless()))),
        }
    }
}

/// Glorot-uniform weights (`|w| ≤ √(6/(fan_in + fan_out))`), zero biases.
pub fn init_params<T: Scalar>(spec: LayerSpec, seed: u64) -> Result<NetworkParams<T>> {
    spec.validate()?;
    let mut rng = seeds::stream(seed, seeds::STREAM_INIT);
    let mut params = NetworkParams::zeros(spec);
    for w in params.weights.iter_mut() {
        let (fan_out, fan_in) = w.shape();
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        // Row-major fill so the draw order matches the checkpoint layout.
        for i in 0..fan_out {
            for j in 0..fan_in {
                w[(i, j)] = T::lit(rng.random_range(-limit..=limit));
            }
        }
    }
    Ok(params)
}

/// Pre-activations `z[l]` and activations `a[l]` for one batch (one sample
/// per row). `a[0]` is the input.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache<T: Scalar> {
    pub z: Vec<Matrix<T>>,
    pub a: Vec<Matrix<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn output(&self) -> &Matrix<T> {
        &self.a[LAYERS]
    }

    pub fn batch_size(&self) -> usize {
        self.a[0].nrows()
    }
}

#[inline]
fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `z = a_prev·Wᵀ + 1·Bᵀ`.
fn affine<T: Scalar>(a_prev: &Matrix<T>, w: &Matrix<T>, b: &Vector<T>) -> Matrix<T> {
    let mut z = a_prev * w.transpose();
    for (j, mut col) in z.column_iter_mut().enumerate() {
        col.add_scalar_mut(b[j]);
    }
    z
}

pub fn forward<T: Scalar>(params: &NetworkParams<T>, input: &Matrix<T>) -> Result<ForwardCache<T>> {
    if input.ncols() != params.spec.n_in {
        return Err(Error::dim(format!(
            "input batch has {} columns, network expects {}",
            input.ncols(),
            params.spec.n_in
        )));
    }
    let mut z = Vec::with_capacity(LAYERS);
    let mut a = Vec::with_capacity(LAYERS + 1);
    a.push(input.clone());
    for l in 0..LAYERS {
        let zl = affine(&a[l], &params.weights[l], &params.biases[l]);
        let al = if l == LAYERS - 1 {
            zl.map(sigmoid)
        } else {
            zl.clone()
        };
        z.push(zl);
        a.push(al);
    }
    Ok(ForwardCache { z, a })
}

/// Network output only.
pub fn predict<T: Scalar>(params: &NetworkParams<T>, input: &Matrix<T>) -> Result<Matrix<T>> {
    if input.ncols() != params.spec.n_in {
        return Err(Error::dim(format!(
            "input batch has {} columns, network expects {}",
            input.ncols(),
            params.spec.n_in
        )));
    }
    let mut a = input.clone();
    for l in 0..LAYERS {
        a = affine(&a, &params.weights[l], &params.biases[l]);
    }
    Ok(a.map(sigmoid))
}

/// `J = (1/2M)·Σ(pred − target)² + (λ/2)·Σ_l ‖W[l]‖²_F`, `M` = batch rows.
pub fn cost<T: Scalar>(
    pred: &Matrix<T>,
    target: &Matrix<T>,
    params: &NetworkParams<T>,
    lambda: T,
) -> Result<T> {
    if pred.shape() != target.shape() {
        return Err(Error::dim(format!(
            "prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let m = T::from_usize_exact(pred.nrows().max(1));
    let two = T::lit(2.0);
    let data = (pred - target).norm_squared() / (two * m);
    Ok(data + lambda / two * params.squared_weight_norm())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T: Scalar> {
    /// Fractional weight gradients `D^α W[l]`.
    pub weights: [Matrix<T>; LAYERS],
    pub biases: [Vector<T>; LAYERS],
}

/// Fractional backward pass.
///
/// Starts from `dZ[4] = (A[4] − Y)⊙σ′(Z[4])` and walks down the layers:
/// the batch-averaged integer gradient `dZ[l]ᵀ·A[l−1]/b` is scaled
/// elementwise by the Caputo weight factor of `W[l]` and the fractional
/// weight-decay term is added; `dB[l]` is the batch mean of `dZ[l]` and
/// `dZ[l−1] = dZ[l]·W[l]` (hidden activations are linear).
pub fn fractional_backward<T: Scalar>(
    params: &NetworkParams<T>,
    cache: &ForwardCache<T>,
    target: &Matrix<T>,
    alpha: FractionalOrder,
    lambda: T,
    eps: T,
) -> Result<Gradients<T>> {
    if cache.a.len() != LAYERS + 1 || cache.z.len() != LAYERS {
        return Err(Error::dim("forward cache does not hold four layers"));
    }
    for l in 0..LAYERS {
        let (rows, cols) = params.weights[l].shape();
        if cache.a[l].ncols() != cols || cache.z[l].ncols() != rows {
            return Err(Error::dim(format!(
                "forward cache does not match layer {}",
                l + 1
            )));
        }
    }
    let out = cache.output();
    if out.shape() != target.shape() {
        return Err(Error::dim(format!(
            "output {:?} vs target {:?}",
            out.shape(),
            target.shape()
        )));
    }
    let kernel = CaputoKernel::new(alpha, eps);
    let inv_b = T::one() / T::from_usize_exact(cache.batch_size().max(1));

    let mut dz = (out - target).zip_map(out, |d, a| d * a * (T::one() - a));
    let mut dw: [Option<Matrix<T>>; LAYERS] = Default::default();
    let mut db: [Option<Vector<T>>; LAYERS] = Default::default();
    for l in (0..LAYERS).rev() {
        let w = &params.weights[l];
        let integer = dz.tr_mul(&cache.a[l]) * inv_b;
        let frac = integer.zip_map(w, |g, wv| kernel.apply(g, wv, lambda));
        dw[l] = Some(frac);
        db[l] = Some(Vector::from_iterator(
            dz.ncols(),
            dz.column_iter().map(|c| c.sum() * inv_b),
        ));
        if l > 0 {
            dz = &dz * w;
        }
    }
    Ok(Gradients {
        weights: dw.map(|g| g.expect("every layer visited")),
        biases: db.map(|g| g.expect("every layer visited")),
    })
}

/// `W ← W − η·D^αW`, `B ← B − η·dB`.
pub fn sgd_step<T: Scalar>(params: &mut NetworkParams<T>, grads: &Gradients<T>, eta: T) {
    for l in 0..LAYERS {
        params.weights[l].zip_apply(&grads.weights[l], |w, g| *w -= eta * g);
        params.biases[l].zip_apply(&grads.biases[l], |b, g| *b -= eta * g);
    }
}
