//! Orthonormal discrete Tchebichef polynomials and the 1-D moment transform.
//!
//! Row `m` of the basis matrix holds `t_m(0..N)`. Rows 0 and 1 come from
//! their closed forms; higher rows are generated along `x` (not along the
//! order), which stays orthonormal to ~1e-14 for N in the hundreds where the
//! order-direction recurrence overflows.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TchebichefBasis<T> {
    length: usize,
    order: usize,
    q: Matrix<T>,
}

/// Moments of one fragment, `coeffs[m] = Σ_x t_m(x)·signal(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector<T> {
    pub coeffs: Vec<T>,
    pub basis_length: usize,
}

type CacheKey = (TypeId, usize, usize);
type Cache = Mutex<HashMap<CacheKey, Arc<dyn Any + Send + Sync>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

impl<T: Scalar> TchebichefBasis<T> {
    /// Builds the `order × length` basis matrix.
    pub fn new(length: usize, order: usize) -> Result<Self> {
        if length < 2 {
            return Err(Error::InvalidLength(length));
        }
        if order == 0 || order > length {
            return Err(Error::InvalidOrder { order, length });
        }
        let rows = tchebichef_rows(length, order);
        let q = Matrix::from_fn(order, length, |m, x| T::lit(rows[m][x]));
        Ok(Self { length, order, q })
    }

    /// Memoized variant of [`TchebichefBasis::new`], shared process-wide.
    pub fn cached(length: usize, order: usize) -> Result<Arc<Self>> {
        let key = (TypeId::of::<T>(), length, order);
        if let Some(hit) = cache().lock().expect("basis cache poisoned").get(&key) {
            return Ok(Arc::clone(hit)
                .downcast::<Self>()
                .expect("cache entry keyed by TypeId"));
        }
        let built = Arc::new(Self::new(length, order)?);
        cache()
            .lock()
            .expect("basis cache poisoned")
            .entry(key)
            .or_insert_with(|| built.clone() as Arc<dyn Any + Send + Sync>);
        Ok(built)
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// The `order × length` matrix Q.
    pub fn matrix(&self) -> &Matrix<T> {
        &self.q
    }

    pub fn forward(&self, signal: &[T]) -> Result<MomentVector<T>> {
        if signal.len() != self.length {
            return Err(Error::dim(format!(
                "signal has {} samples, basis expects {}",
                signal.len(),
                self.length
            )));
        }
        let coeffs = (0..self.order)
            .map(|m| {
                self.q
                    .row(m)
                    .iter()
                    .zip(signal)
                    .fold(T::zero(), |acc, (&t, &s)| acc + t * s)
            })
            .collect();
        Ok(MomentVector {
            coeffs,
            basis_length: self.length,
        })
    }

    pub fn inverse(&self, moments: &MomentVector<T>) -> Result<Vec<T>> {
        if moments.coeffs.len() != self.order {
            return Err(Error::dim(format!(
                "{} moments given, basis has order {}",
                moments.coeffs.len(),
                self.order
            )));
        }
        if moments.basis_length != self.length {
            return Err(Error::dim(format!(
                "moments reconstruct to length {}, basis has length {}",
                moments.basis_length, self.length
            )));
        }
        let mut out = vec![T::zero(); self.length];
        for (m, &c) in moments.coeffs.iter().enumerate() {
            for (o, &t) in out.iter_mut().zip(self.q.row(m).iter()) {
                *o += c * t;
            }
        }
        Ok(out)
    }

    /// Row-wise forward transform: `fragments` is `count × length`, the
    /// result is `count × order`.
    pub fn forward_batch(&self, fragments: &Matrix<T>) -> Result<Matrix<T>> {
        if fragments.ncols() != self.length {
            return Err(Error::dim(format!(
                "fragment batch has {} columns, basis expects {}",
                fragments.ncols(),
                self.length
            )));
        }
        Ok(fragments * self.q.transpose())
    }

    /// Row-wise inverse transform: `count × order` moments to `count × length`.
    pub fn inverse_batch(&self, moments: &Matrix<T>) -> Result<Matrix<T>> {
        if moments.ncols() != self.order {
            return Err(Error::dim(format!(
                "moment batch has {} columns, basis has order {}",
                moments.ncols(),
                self.order
            )));
        }
        Ok(moments * &self.q)
    }
}

pub fn build_basis<T: Scalar>(length: usize, order: usize) -> Result<TchebichefBasis<T>> {
    TchebichefBasis::new(length, order)
}

pub fn forward_moments<T: Scalar>(
    signal: &[T],
    basis: &TchebichefBasis<T>,
) -> Result<MomentVector<T>> {
    basis.forward(signal)
}

pub fn inverse_moments<T: Scalar>(
    moments: &MomentVector<T>,
    basis: &TchebichefBasis<T>,
) -> Result<Vec<T>> {
    basis.inverse(moments)
}

/// Polynomial values in double precision, `rows[m][x] = t_m(x)`.
fn tchebichef_rows(length: usize, order: usize) -> Vec<Vec<f64>> {
    let nf = length as f64;
    let mut rows = Vec::with_capacity(order);
    rows.push(vec![1.0 / nf.sqrt(); length]);
    if order > 1 {
        let scale = (3.0 / (nf * (nf * nf - 1.0))).sqrt();
        rows.push(
            (0..length)
                .map(|x| (2.0 * x as f64 + 1.0 - nf) * scale)
                .collect(),
        );
    }
    // t_m(0) by its own product recurrence over the order.
    let mut edge = 1.0 / nf.sqrt();
    for k in 1..order {
        let kf = k as f64;
        edge *= -((nf - kf) / (nf + kf)).sqrt() * ((2.0 * kf + 1.0) / (2.0 * kf - 1.0)).sqrt();
        if k < 2 {
            continue;
        }
        rows.push(row_along_x(length, k, edge));
    }
    rows
}

fn row_along_x(length: usize, m: usize, at_zero: f64) -> Vec<f64> {
    let nf = length as f64;
    let mf = m as f64;
    let mut row = vec![0.0; length];
    row[0] = at_zero;
    row[1] = (1.0 + mf * (mf + 1.0) / (1.0 - nf)) * at_zero;
    let half = length.div_ceil(2);
    for x in 2..half {
        let xf = x as f64;
        let denom = xf * (nf - xf);
        let g1 = (-mf * (mf + 1.0) - (2.0 * xf - 1.0) * (xf - nf - 1.0) - xf) / denom;
        let g2 = (xf - 1.0) * (xf - nf - 1.0) / denom;
        row[x] = g1 * row[x - 1] + g2 * row[x - 2];
    }
    let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
    for x in half.max(2)..length {
        row[x] = parity * row[length - 1 - x];
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_identity_deviation;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Classical three-term recurrence along the order with the standard
    /// orthonormal coefficients. Only usable for small N.
    fn order_recurrence(n: usize) -> Vec<Vec<f64>> {
        let nf = n as f64;
        let mut rows: Vec<Vec<f64>> = vec![vec![1.0 / nf.sqrt(); n]];
        rows.push(
            (0..n)
                .map(|x| (2.0 * x as f64 + 1.0 - nf) * (3.0 / (nf * (nf * nf - 1.0))).sqrt())
                .collect(),
        );
        for m in 2..n {
            let mf = m as f64;
            let a1 = (1.0 / mf) * ((4.0 * mf * mf - 1.0) / (nf * nf - mf * mf)).sqrt();
            let a2 = ((1.0 - mf) / mf)
                * ((2.0 * mf + 1.0) / (2.0 * mf - 3.0)).sqrt()
                * ((nf * nf - (mf - 1.0).powi(2)) / (nf * nf - mf * mf)).sqrt();
            let row = (0..n)
                .map(|x| a1 * (2.0 * x as f64 + 1.0 - nf) * rows[m - 1][x] + a2 * rows[m - 2][x])
                .collect();
            rows.push(row);
        }
        rows
    }

    fn random_signal(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-50.0..50.0)).collect()
    }

    #[test]
    fn constant_row_for_order_one() {
        let b = TchebichefBasis::<f64>::new(4, 1).unwrap();
        assert_eq!(b.matrix().as_slice(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn first_order_row_n4() {
        let b = TchebichefBasis::<f64>::new(4, 2).unwrap();
        let expected = [-0.6708, -0.2236, 0.2236, 0.6708];
        for (x, e) in expected.iter().enumerate() {
            assert!((b.matrix()[(1, x)] - e).abs() < 1e-4);
        }
    }

    #[test]
    fn rows_match_order_recurrence_for_small_n() {
        for n in [2usize, 3, 5, 8, 16] {
            let oracle = order_recurrence(n);
            let b = TchebichefBasis::<f64>::new(n, n).unwrap();
            for m in 0..n {
                for x in 0..n {
                    assert!(
                        (b.matrix()[(m, x)] - oracle[m][x]).abs() < 1e-11,
                        "n={n} m={m} x={x}"
                    );
                }
            }
        }
    }

    #[test]
    fn orthonormal_both_ways() {
        for n in [2usize, 16, 250] {
            let q = TchebichefBasis::<f64>::new(n, n).unwrap().matrix().clone();
            assert!(
                max_identity_deviation(&(&q * q.transpose())) < 1e-9,
                "QQᵀ n={n}"
            );
            assert!(
                max_identity_deviation(&(q.transpose() * &q)) < 1e-9,
                "QᵀQ n={n}"
            );
        }
    }

    #[test]
    fn partial_order_rows_orthonormal() {
        let q = TchebichefBasis::<f64>::new(250, 40)
            .unwrap()
            .matrix()
            .clone();
        assert!(max_identity_deviation(&(&q * q.transpose())) < 1e-9);
    }

    #[test]
    fn invalid_arguments() {
        assert!(matches!(
            TchebichefBasis::<f64>::new(4, 5),
            Err(Error::InvalidOrder {
                order: 5,
                length: 4
            })
        ));
        assert!(matches!(
            TchebichefBasis::<f64>::new(1, 1),
            Err(Error::InvalidLength(1))
        ));
        assert!(matches!(
            TchebichefBasis::<f64>::new(4, 0),
            Err(Error::InvalidOrder { .. })
        ));
    }

    #[test]
    fn constant_signal_has_only_dc_moment() {
        let b = TchebichefBasis::<f64>::new(16, 10).unwrap();
        let c = 3.5;
        let m = b.forward(&[c; 16]).unwrap();
        assert!((m.coeffs[0] - c * 4.0).abs() < 1e-9);
        assert!(m.coeffs[1..].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn basis_row_maps_to_unit_vector() {
        let b = TchebichefBasis::<f64>::new(32, 12).unwrap();
        let row: Vec<f64> = b.matrix().row(7).iter().copied().collect();
        let m = b.forward(&row).unwrap();
        for (k, v) in m.coeffs.iter().enumerate() {
            let e = if k == 7 { 1.0 } else { 0.0 };
            assert!((v - e).abs() < 1e-9);
        }
    }

    #[test]
    fn parseval_and_round_trip_full_order() {
        let b = TchebichefBasis::<f64>::new(250, 250).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let x = random_signal(250, &mut rng);
            let m = b.forward(&x).unwrap();
            let e_sig: f64 = x.iter().map(|v| v * v).sum();
            let e_mom: f64 = m.coeffs.iter().map(|v| v * v).sum();
            assert!(((e_sig - e_mom) / e_sig).abs() < 1e-8);
            let back = b.inverse(&m).unwrap();
            let err = x
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-8);
        }
    }

    #[test]
    fn truncation_error_equals_dropped_energy() {
        let full = TchebichefBasis::<f64>::new(64, 64).unwrap();
        let part = TchebichefBasis::<f64>::new(64, 20).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_signal(64, &mut rng);
        let all = full.forward(&x).unwrap();
        let dropped: f64 = all.coeffs[20..].iter().map(|v| v * v).sum();
        let recon = part.inverse(&part.forward(&x).unwrap()).unwrap();
        let residual: f64 = x.iter().zip(&recon).map(|(a, b)| (a - b) * (a - b)).sum();
        assert!((residual - dropped).abs() < 1e-8 * (1.0 + dropped));
    }

    #[test]
    fn zero_moments_give_zero_signal() {
        let b = TchebichefBasis::<f64>::new(10, 6).unwrap();
        let out = b
            .inverse(&MomentVector {
                coeffs: vec![0.0; 6],
                basis_length: 10,
            })
            .unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_errors() {
        let b = TchebichefBasis::<f64>::new(10, 6).unwrap();
        assert!(matches!(b.forward(&[0.0; 9]), Err(Error::Dimension(_))));
        let bad = MomentVector {
            coeffs: vec![0.0; 5],
            basis_length: 10,
        };
        assert!(matches!(b.inverse(&bad), Err(Error::Dimension(_))));
    }

    #[test]
    fn batch_transform_matches_single() {
        let b = TchebichefBasis::<f64>::new(16, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let frags = Matrix::from_fn(3, 16, |_, _| rng.random_range(-1.0..1.0));
        let mom = b.forward_batch(&frags).unwrap();
        for r in 0..3 {
            let row: Vec<f64> = frags.row(r).iter().copied().collect();
            let single = b.forward(&row).unwrap();
            for c in 0..16 {
                assert!((mom[(r, c)] - single.coeffs[c]).abs() < 1e-12);
            }
        }
        let back = b.inverse_batch(&mom).unwrap();
        assert!((back - frags).norm() < 1e-10);
    }

    #[test]
    fn cached_basis_is_shared() {
        let a = TchebichefBasis::<f64>::cached(24, 24).unwrap();
        let b = TchebichefBasis::<f64>::cached(24, 24).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let c = TchebichefBasis::<f32>::cached(24, 24).unwrap();
        assert_eq!(c.order(), 24);
    }

    #[test]
    fn single_precision_basis() {
        let q = TchebichefBasis::<f32>::new(64, 64)
            .unwrap()
            .matrix()
            .clone();
        assert!(max_identity_deviation(&(&q * q.transpose())) < 1e-5);
    }

    proptest! {
        #[test]
        fn forward_is_linear(
            xs in proptest::collection::vec(-100.0f64..100.0, 16),
            ys in proptest::collection::vec(-100.0f64..100.0, 16),
            a in -5.0f64..5.0,
            c in -5.0f64..5.0,
        ) {
            let b = TchebichefBasis::<f64>::cached(16, 16).unwrap();
            let combo: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| a * x + c * y).collect();
            let lhs = b.forward(&combo).unwrap();
            let tx = b.forward(&xs).unwrap();
            let ty = b.forward(&ys).unwrap();
            for k in 0..16 {
                let rhs = a * tx.coeffs[k] + c * ty.coeffs[k];
                prop_assert!((lhs.coeffs[k] - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
            }
        }
    }
}
