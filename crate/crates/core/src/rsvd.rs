//! Randomized SVD with QR subspace iteration, optimized-rank selection and
//! low-rank weight compression.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{exact_svd, orthonormal_basis, Matrix};
use crate::seeds;
use crate::Scalar;

/// Default number of subspace iterations; also the oversampling count.
pub const DEFAULT_POWER_ITERS: usize = 5;
/// Default singular-value energy kept by the optimized-rank rule.
pub const DEFAULT_ENERGY_FRACTION: f64 = 0.9;

/// Thin SVD factors `A ≈ U·diag(S)·Vᵀ`, singular values descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriple<T> {
    /// `n × r`, orthonormal columns.
    pub u: Matrix<T>,
    pub s: Vec<T>,
    /// `m × r`, orthonormal columns.
    pub v: Matrix<T>,
}

impl<T: Scalar> SvdTriple<T> {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn truncate(mut self, r: usize) -> Self {
        let r = r.min(self.s.len());
        self.s.truncate(r);
        self.u = self.u.columns(0, r).into_owned();
        self.v = self.v.columns(0, r).into_owned();
        self
    }

    /// Dense `U·diag(S)·Vᵀ`.
    pub fn reconstruct(&self) -> Matrix<T> {
        let mut us = self.u.clone();
        for (j, &s) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.transpose()
    }
}

/// Randomized SVD of `a` (`n × m`) at target rank `rank`.
///
/// A Gaussian sketch with `rank + power_iters` columns is drawn from `seed`;
/// `power_iters` rounds of QR subspace iteration refine the range basis, the
/// projected matrix is decomposed exactly and the leading `rank` triples are
/// returned. Requires `rank ≥ 1`, `power_iters ≥ 1` and
/// `rank + power_iters < n`.
pub fn rsvd<T: Scalar>(
    a: &Matrix<T>,
    rank: usize,
    power_iters: usize,
    seed: u64,
) -> Result<SvdTriple<T>> {
    let (n, m) = a.shape();
    if rank == 0 {
        return Err(Error::Parameter("target rank must be at least 1".into()));
    }
    if power_iters == 0 {
        return Err(Error::Parameter(
            "at least one subspace iteration is required".into(),
        ));
    }
    if rank + power_iters >= n {
        return Err(Error::Parameter(format!(
            "rank {rank} + iterations {power_iters} must be below the row count {n}"
        )));
    }
    let sketch = gaussian_sketch::<T>(m, rank + power_iters, seed);
    let mut q = orthonormal_basis(a * sketch);
    for _ in 0..power_iters {
        let g = orthonormal_basis(a.tr_mul(&q));
        q = orthonormal_basis(a * g);
    }
    let b = q.tr_mul(a);
    let small = exact_svd(&b);
    let lifted = SvdTriple {
        u: &q * small.u,
        s: small.s,
        v: small.v,
    };
    Ok(lifted.truncate(rank))
}

/// Subspace basis after the sketch and all iterations; exposed for tests of
/// the orthonormality invariant.
#[doc(hidden)]
pub fn range_bases<T: Scalar>(
    a: &Matrix<T>,
    width: usize,
    power_iters: usize,
    seed: u64,
) -> Vec<Matrix<T>> {
    let mut out = Vec::with_capacity(power_iters + 1);
    let mut q = orthonormal_basis(a * gaussian_sketch::<T>(a.ncols(), width, seed));
    out.push(q.clone());
    for _ in 0..power_iters {
        let g = orthonormal_basis(a.tr_mul(&q));
        q = orthonormal_basis(a * g);
        out.push(q.clone());
    }
    out
}

/// Column-major Gaussian draws so that sketches of different widths from
/// the same seed share their leading columns.
fn gaussian_sketch<T: Scalar>(rows: usize, cols: usize, seed: u64) -> Matrix<T> {
    let mut rng = seeds::stream(seed, seeds::STREAM_RSVD);
    let mut o = Matrix::<T>::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            let z: f64 = rng.sample(StandardNormal);
            o[(i, j)] = T::lit(z);
        }
    }
    o
}

/// Rank-`rank` SVD: randomized when its preconditions hold, otherwise the
/// exact decomposition truncated. `rank` is clamped to `min(n, m)`.
pub fn truncated_svd<T: Scalar>(
    a: &Matrix<T>,
    rank: usize,
    power_iters: usize,
    seed: u64,
) -> Result<SvdTriple<T>> {
    let (n, m) = a.shape();
    if n == 0 || m == 0 {
        return Err(Error::Parameter("cannot decompose an empty matrix".into()));
    }
    let rank = rank.clamp(1, n.min(m));
    if power_iters >= 1 && rank + power_iters < n {
        rsvd(a, rank, power_iters, seed)
    } else {
        Ok(exact_svd(a).truncate(rank))
    }
}

/// Smallest `r` whose leading singular values hold at least `fraction` of
/// the total singular-value sum. Returns 1 for an all-zero spectrum.
pub fn check_optimized_rank<T: Scalar>(s: &[T], fraction: f64) -> usize {
    let total: f64 = s.iter().map(|v| v.to_f64_lossless()).sum();
    if total <= 0.0 {
        return 1;
    }
    let target = fraction * total;
    let mut acc = 0.0;
    for (i, v) in s.iter().enumerate() {
        acc += v.to_f64_lossless();
        if acc >= target {
            return i + 1;
        }
    }
    s.len().max(1)
}

/// Optimized-rank compression: near-full-rank decomposition, keep the
/// smallest rank that covers `fraction` of the singular-value energy,
/// rebuild at the original shape.
pub fn compress_opt<T: Scalar>(
    w: &Matrix<T>,
    power_iters: usize,
    fraction: f64,
    seed: u64,
) -> Result<Matrix<T>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Parameter(format!(
            "energy fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let full = w.nrows().min(w.ncols());
    let r = full.saturating_sub(power_iters).max(1);
    let svd = truncated_svd(w, r, power_iters, seed)?;
    let keep = check_optimized_rank(&svd.s, fraction);
    Ok(svd.truncate(keep).reconstruct())
}

/// Rank kept at compression ratio `c_r`: `max(1, ⌊(1 − c_r)·min(n, m)⌋)`.
pub fn retained_rank(shape: (usize, usize), c_r: f64) -> usize {
    let full = shape.0.min(shape.1) as f64;
    // The nudge keeps products like 0.9·100 from flooring to 89.
    (((1.0 - c_r) * full + 1e-9).floor() as usize).max(1)
}

/// Fixed-ratio compression used at evaluation time.
pub fn compress_at_ratio<T: Scalar>(
    w: &Matrix<T>,
    c_r: f64,
    power_iters: usize,
    seed: u64,
) -> Result<Matrix<T>> {
    if !(0.0..1.0).contains(&c_r) {
        return Err(Error::Parameter(format!(
            "compression ratio must lie in [0, 1), got {c_r}"
        )));
    }
    let r = retained_rank(w.shape(), c_r);
    Ok(truncated_svd(w, r, power_iters, seed)?.reconstruct())
}

/// `(E, F_s)`: share of singular-value sum held by the first `r` values and
/// the share of values kept.
pub fn energy_fraction<T: Scalar>(s: &[T], r: usize) -> Result<(f64, f64)> {
    let big_r = s.len();
    if r == 0 || r > big_r {
        return Err(Error::Parameter(format!("rank {r} outside 1..={big_r}")));
    }
    let total: f64 = s.iter().map(|v| v.to_f64_lossless()).sum();
    let kept: f64 = s[..r].iter().map(|v| v.to_f64_lossless()).sum();
    let e = if total > 0.0 { kept / total } else { 1.0 };
    Ok((e, r as f64 / big_r as f64))
}

/// `(F_s, E)` for every `r = 1..=R`.
pub fn energy_profile<T: Scalar>(s: &[T]) -> Vec<(f64, f64)> {
    (1..=s.len())
        .map(|r| {
            let (e, f) = energy_fraction(s, r).expect("r in range");
            (f, e)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_identity_deviation;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, m: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, m, |_, _| rng.sample(StandardNormal))
    }

    /// Exact truncated-SVD error from nalgebra's decomposition.
    fn optimal_error(a: &Matrix<f64>, r: usize) -> f64 {
        let mut s: Vec<f64> = a
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        s.sort_by(|x, y| y.partial_cmp(x).unwrap());
        s[r..].iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn orthonormal(m: &Matrix<f64>) -> bool {
        max_identity_deviation(&(m.transpose() * m)) < 1e-8
    }

    #[test]
    fn rank_one_recovery() {
        let u = random(20, 1, 1).normalize();
        let v = random(15, 1, 2).normalize();
        let a = &u * v.transpose() * 3.0;
        let svd = rsvd(&a, 1, 5, 9).unwrap();
        assert!((svd.s[0] - 3.0).abs() < 1e-8);
        assert!((svd.reconstruct() - &a).norm() < 1e-8);
    }

    #[test]
    fn embedded_diagonal() {
        let mut a = Matrix::<f64>::zeros(8, 6);
        for (i, d) in [5.0, 4.0, 3.0, 2.0, 1.0].iter().enumerate() {
            a[(i, i)] = *d;
        }
        // 3 + 5 ≥ 8 rows, so use fewer iterations to stay on the randomized path.
        let svd = rsvd(&a, 3, 2, 4).unwrap();
        for (s, e) in svd.s.iter().zip([5.0, 4.0, 3.0]) {
            assert!((s - e).abs() < 1e-6);
        }
        let fallback = truncated_svd(&a, 3, 5, 4).unwrap();
        for (s, e) in fallback.s.iter().zip([5.0, 4.0, 3.0]) {
            assert!((s - e).abs() < 1e-12);
        }
    }

    #[test]
    fn near_optimal_on_random_matrix() {
        let a = random(100, 80, 3);
        let svd = rsvd(&a, 10, 5, 11).unwrap();
        let err = (&a - svd.reconstruct()).norm();
        assert!(err <= 1.05 * optimal_error(&a, 10));
        assert!(orthonormal(&svd.u) && orthonormal(&svd.v));
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]) && svd.s.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn exact_when_rank_fits() {
        let a = random(40, 3, 5) * random(3, 30, 6);
        let svd = rsvd(&a, 4, 5, 1).unwrap();
        assert!((svd.reconstruct() - &a).norm() < 1e-8);
    }

    #[test]
    fn subspace_bases_orthonormal() {
        let a = random(60, 50, 8);
        for q in range_bases(&a, 15, 5, 2) {
            assert!(orthonormal(&q));
        }
    }

    #[test]
    fn zero_matrix() {
        let a = Matrix::<f64>::zeros(30, 20);
        let svd = rsvd(&a, 4, 5, 3).unwrap();
        assert!(svd.s.iter().all(|&s| s == 0.0));
        assert!(orthonormal(&svd.u) && orthonormal(&svd.v));
        assert_eq!(compress_opt(&a, 5, 0.9, 1).unwrap(), a);
    }

    #[test]
    fn deterministic_for_seed() {
        let a = random(50, 40, 4);
        assert_eq!(rsvd(&a, 5, 3, 77).unwrap(), rsvd(&a, 5, 3, 77).unwrap());
    }

    #[test]
    fn parameter_errors() {
        let a = random(10, 10, 1);
        assert!(matches!(rsvd(&a, 0, 2, 1), Err(Error::Parameter(_))));
        assert!(matches!(rsvd(&a, 5, 5, 1), Err(Error::Parameter(_))));
        assert!(matches!(rsvd(&a, 2, 0, 1), Err(Error::Parameter(_))));
        assert!(matches!(
            energy_fraction(&[1.0, 2.0], 3),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            energy_fraction(&[1.0, 2.0], 0),
            Err(Error::Parameter(_))
        ));
        assert!(compress_at_ratio(&a, 1.0, 5, 1).is_err());
    }

    #[test]
    fn optimized_rank_examples() {
        assert_eq!(check_optimized_rank(&[10.0, 0.0, 0.0], 0.9), 1);
        assert_eq!(check_optimized_rank(&[4.0, 3.0, 2.0, 1.0], 0.9), 3);
        assert_eq!(check_optimized_rank(&[1.0; 5], 0.9), 5);
        assert_eq!(check_optimized_rank(&[0.0; 4], 0.9), 1);
    }

    #[test]
    fn compress_opt_keeps_exact_low_rank() {
        let u = orthonormal_basis(random(30, 2, 1));
        let v = orthonormal_basis(random(20, 2, 2));
        let w = &u * Matrix::from_diagonal_element(2, 2, 5.0) * v.transpose();
        let wc = compress_opt(&w, 5, 0.9, 3).unwrap();
        assert!((wc - &w).norm() < 1e-6);
    }

    #[test]
    fn compress_opt_on_random_weights() {
        // 150 rows ≤ 145 + 5, so the near-full-rank decomposition is exact and
        // the retained spectrum is the leading 145 exact singular values.
        let w = random(150, 250, 12);
        let wc = compress_opt(&w, 5, 0.9, 3).unwrap();
        assert_eq!(wc.shape(), (150, 250));
        let s = exact_svd(&w).s;
        let considered = &s[..145];
        let k = check_optimized_rank(considered, 0.9);
        let kept = exact_svd(&wc)
            .s
            .iter()
            .filter(|&&x| x > 1e-8 * s[0])
            .count();
        assert_eq!(kept, k);
        let (e, _) = energy_fraction(considered, k).unwrap();
        assert!(e >= 0.9);
        let dropped: f64 = s[k..].iter().map(|v| v * v).sum();
        let rel = (&w - &wc).norm() / w.norm();
        assert!(
            (rel - dropped.sqrt() / w.norm()).abs() < 1e-8,
            "relative error {rel}"
        );
    }

    #[test]
    fn compress_opt_on_decaying_spectrum() {
        let u = orthonormal_basis(random(150, 150, 1));
        let v = orthonormal_basis(random(250, 150, 2));
        let spectrum: Vec<f64> = (0..150).map(|i| 10.0 * 0.9f64.powi(i)).collect();
        let w =
            &u * Matrix::from_diagonal(&crate::linalg::Vector::from_vec(spectrum)) * v.transpose();
        let wc = compress_opt(&w, 5, 0.9, 3).unwrap();
        let rel = (&w - &wc).norm() / w.norm();
        assert!(rel <= 1.0 - 0.9 + 0.05, "relative error {rel}");
    }

    #[test]
    fn ratio_to_rank() {
        assert_eq!(retained_rank((100, 100), 0.5), 50);
        assert_eq!(retained_rank((150, 75), 0.95), 3);
        assert_eq!(retained_rank((100, 100), 0.9), 10);
        assert_eq!(retained_rank((4, 3), 0.95), 1);
        assert_eq!(retained_rank((150, 250), 0.0), 150);
    }

    #[test]
    fn no_compression_is_lossless() {
        let w = random(40, 40, 9);
        let wc = compress_at_ratio(&w, 0.0, 5, 1).unwrap();
        assert!((&w - wc).norm() / w.norm() < 1e-6);
        let tall = random(250, 150, 10);
        let tc = compress_at_ratio(&tall, 0.0, 5, 1).unwrap();
        assert!((&tall - tc).norm() / tall.norm() < 1e-6);
    }

    #[test]
    fn energy_examples() {
        assert_eq!(
            energy_fraction(&[4.0, 3.0, 2.0, 1.0], 4).unwrap(),
            (1.0, 1.0)
        );
        let (e, f) = energy_fraction(&[4.0, 3.0, 2.0, 1.0], 2).unwrap();
        assert!((e - 0.7).abs() < 1e-15 && f == 0.5);
        let profile = energy_profile(&[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(profile.len(), 4);
        assert_eq!(*profile.last().unwrap(), (1.0, 1.0));
    }

    #[test]
    fn single_precision_rsvd() {
        let a = random(60, 40, 4).map(|x| x as f32);
        let svd = rsvd(&a, 8, 3, 5).unwrap();
        assert_eq!(svd.u.shape(), (60, 8));
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn error_monotone_in_ratio(seed in 0u64..1000, c1 in 0.0f64..0.95, c2 in 0.0f64..0.95) {
            let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            let w = random(60, 40, seed);
            let e_lo = (&w - compress_at_ratio(&w, lo, 5, seed).unwrap()).norm();
            let e_hi = (&w - compress_at_ratio(&w, hi, 5, seed).unwrap()).norm();
            prop_assert!(e_lo <= e_hi + 1e-9);
        }

        #[test]
        fn optimized_rank_is_minimal(raw in proptest::collection::vec(0.0f64..10.0, 1..40), frac in 0.05f64..1.0) {
            let mut s = raw;
            s.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let r = check_optimized_rank(&s, frac);
            let total: f64 = s.iter().sum();
            let prefix = |k: usize| s[..k].iter().sum::<f64>();
            if total > 0.0 {
                prop_assert!(prefix(r) >= frac * total);
                prop_assert!(r == 1 || prefix(r - 1) < frac * total);
            } else {
                prop_assert_eq!(r, 1);
            }
        }
    }
}
