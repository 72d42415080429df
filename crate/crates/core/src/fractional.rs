//! Caputo power-rule kernels used by fractional backpropagation.
//!
//! For a weight `w` and order `α ∈ [1, 2)` the integer-order gradient is
//! scaled by `|w|^(1−α) / Γ(2−α)` and the weight-decay term becomes
//! `λ·sign(w)·|w|^(2−α) / Γ(3−α)`. Both reduce to the classical gradient
//! at `α = 1`.

use crate::error::{Error, Result};
use crate::Scalar;

/// Default clamp for `|w|` before raising it to a negative power.
pub const DEFAULT_EPS_CLAMP: f64 = 1e-8;

/// Fractional differentiation order, `1.0 ≤ α < 2.0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub const INTEGER: FractionalOrder = FractionalOrder(1.0);

    pub fn new(alpha: f64) -> Result<Self> {
        if (1.0..2.0).contains(&alpha) {
            Ok(Self(alpha))
        } else {
            Err(Error::Parameter(format!(
                "fractional order must lie in [1, 2), got {alpha}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0 == 1.0
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = Error;
    fn try_from(alpha: f64) -> Result<Self> {
        Self::new(alpha)
    }
}

impl From<FractionalOrder> for f64 {
    fn from(a: FractionalOrder) -> f64 {
        a.0
    }
}

impl Default for FractionalOrder {
    fn default() -> Self {
        Self::INTEGER
    }
}

impl std::fmt::Display for FractionalOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function on the positive real axis.
///
/// Positive integers up to 21 return the exact factorial; everything else
/// uses the Lanczos approximation (g = 7, 9 terms) with reflection below 1/2.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "gamma requires a finite x > 0, got {x}"
        )));
    }
    if x.fract() == 0.0 && x <= 21.0 {
        return Ok((1..x as u64).map(|k| k as f64).product());
    }
    Ok(lanczos(x))
}

fn lanczos(x: f64) -> f64 {
    use std::f64::consts::PI;
    if x < 0.5 {
        return PI / ((PI * x).sin() * lanczos(1.0 - x));
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    let series = LANCZOS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS[0], |acc, (i, c)| acc + c / (z + i as f64 + 1.0));
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * series
}

/// Precomputed gamma denominators for a fixed order; used on whole matrices.
#[derive(Debug, Clone, Copy)]
pub struct CaputoKernel<T> {
    alpha: FractionalOrder,
    factor_exp: T,
    reg_exp: T,
    inv_gamma_factor: T,
    inv_gamma_reg: T,
    eps: T,
}

impl<T: Scalar> CaputoKernel<T> {
    pub fn new(alpha: FractionalOrder, eps: T) -> Self {
        let a = alpha.get();
        // 2 − α ∈ (0, 1] and 3 − α ∈ (1, 2] are always valid gamma arguments.
        let g2 = gamma_fn(2.0 - a).expect("2 - alpha > 0");
        let g3 = gamma_fn(3.0 - a).expect("3 - alpha > 0");
        Self {
            alpha,
            factor_exp: T::lit(1.0 - a),
            reg_exp: T::lit(2.0 - a),
            inv_gamma_factor: T::lit(1.0 / g2),
            inv_gamma_reg: T::lit(1.0 / g3),
            eps,
        }
    }

    pub fn alpha(&self) -> FractionalOrder {
        self.alpha
    }

    /// `max(|w|, eps)^(1−α) / Γ(2−α)`; exactly 1 at `α = 1`.
    #[inline]
    pub fn weight_factor(&self, w: T) -> T {
        if self.alpha.is_integer() {
            return T::one();
        }
        w.abs().max(self.eps).powf(self.factor_exp) * self.inv_gamma_factor
    }

    /// `λ·sign(w)·max(|w|, eps)^(2−α) / Γ(3−α)`; exactly `λ·w` at `α = 1`.
    #[inline]
    pub fn reg_term(&self, w: T, lambda: T) -> T {
        if self.alpha.is_integer() {
            return lambda * w;
        }
        if w == T::zero() {
            return T::zero();
        }
        let mag = w.abs().max(self.eps).powf(self.reg_exp) * self.inv_gamma_reg;
        if w > T::zero() {
            lambda * mag
        } else {
            -(lambda * mag)
        }
    }

    /// `g·weight_factor(w) + reg_term(w, λ)` with a single power evaluation.
    #[inline]
    pub fn apply(&self, g: T, w: T, lambda: T) -> T {
        if self.alpha.is_integer() {
            return g + lambda * w;
        }
        let mag = w.abs().max(self.eps);
        let p = mag.powf(self.factor_exp);
        let reg = if w == T::zero() {
            T::zero()
        } else {
            let r = lambda * mag * p * self.inv_gamma_reg;
            if w > T::zero() {
                r
            } else {
                -r
            }
        };
        g * p * self.inv_gamma_factor + reg
    }
}

pub fn caputo_weight_factor<T: Scalar>(w: T, alpha: FractionalOrder, eps: T) -> T {
    CaputoKernel::new(alpha, eps).weight_factor(w)
}

pub fn caputo_reg_term<T: Scalar>(w: T, alpha: FractionalOrder, lambda: T, eps: T) -> T {
    CaputoKernel::new(alpha, eps).reg_term(w, lambda)
}
