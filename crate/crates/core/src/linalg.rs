//! Dense linear algebra helpers on top of nalgebra storage.

use crate::rsvd::SvdTriple;
use crate::Scalar;

pub type Matrix<T> = nalgebra::DMatrix<T>;
pub type Vector<T> = nalgebra::DVector<T>;

const MAX_JACOBI_SWEEPS: usize = 80;

/// Orthonormal basis for the column space of `m` (the Q factor of a thin
/// Householder QR). The result has `min(rows, cols)` columns.
pub fn orthonormal_basis<T: Scalar>(m: Matrix<T>) -> Matrix<T> {
    m.qr().q()
}

/// Largest absolute deviation of `m` from the identity of the same shape.
pub fn max_identity_deviation<T: Scalar>(m: &Matrix<T>) -> T {
    let mut worst = T::zero();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let target = if i == j { T::one() } else { T::zero() };
            let d = (m[(i, j)] - target).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

pub fn frobenius<T: Scalar>(m: &Matrix<T>) -> T {
    m.norm()
}

/// Exact thin SVD by one-sided (Hestenes) Jacobi rotations.
///
/// Returns `k = min(rows, cols)` triples, singular values descending. Columns
/// belonging to numerically zero singular values are completed to an
/// orthonormal set, so `U` and `V` always have orthonormal columns.
pub fn exact_svd<T: Scalar>(a: &Matrix<T>) -> SvdTriple<T> {
    let (n, m) = a.shape();
    if n == 0 || m == 0 {
        return SvdTriple {
            u: Matrix::zeros(n, 0),
            s: Vec::new(),
            v: Matrix::zeros(m, 0),
        };
    }
    // Rotate the columns of the tall orientation: X·J = Û·Σ.
    let transposed = n < m;
    let mut work = if transposed { a.transpose() } else { a.clone() };
    let k = work.ncols();
    let mut rot = Matrix::<T>::identity(k, k);
    let tol = T::MACHINE_EPSILON * T::from_usize_exact(work.nrows());

    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let (alpha, beta, gamma) = {
                    let cp = work.column(p);
                    let cq = work.column(q);
                    (cp.norm_squared(), cq.norm_squared(), cp.dot(&cq))
                };
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let sign = if zeta >= T::zero() {
                    T::one()
                } else {
                    -T::one()
                };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut work, p, q, c, s);
                rotate_columns(&mut rot, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<T> = (0..k).map(|j| work.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        norms[j]
            .partial_cmp(&norms[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });

    let rows = work.nrows();
    let sigma_max = norms[order[0]];
    let null_tol = sigma_max * T::MACHINE_EPSILON * T::from_usize_exact(rows.max(k));
    let mut left = Matrix::<T>::zeros(rows, k);
    let mut right = Matrix::<T>::zeros(k, k);
    let mut s = Vec::with_capacity(k);
    let mut deficient = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s.push(sigma);
        right.set_column(dst, &rot.column(src));
        if sigma > null_tol && sigma > T::zero() {
            left.set_column(dst, &(work.column(src) / sigma));
        } else {
            deficient.push(dst);
        }
    }
    complete_orthonormal(&mut left, &deficient);

    if transposed {
        // A = (Aᵀ)ᵀ = (Û Σ Jᵀ)ᵀ = J Σ Ûᵀ.
        SvdTriple {
            u: right,
            s,
            v: left,
        }
    } else {
        SvdTriple {
            u: left,
            s,
            v: right,
        }
    }
}

fn rotate_columns<T: Scalar>(m: &mut Matrix<T>, p: usize, q: usize, c: T, s: T) {
    for i in 0..m.nrows() {
        let xp = m[(i, p)];
        let xq = m[(i, q)];
        m[(i, p)] = c * xp - s * xq;
        m[(i, q)] = s * xp + c * xq;
    }
}

/// Fills the listed (zero) columns of `basis` with unit vectors orthogonal to
/// every other column, drawing candidates from the standard basis.
fn complete_orthonormal<T: Scalar>(basis: &mut Matrix<T>, columns: &[usize]) {
    if columns.is_empty() {
        return;
    }
    let rows = basis.nrows();
    let mut candidate = 0;
    for &col in columns {
        loop {
            assert!(candidate < rows, "cannot complete orthonormal basis");
            let mut v = Vector::<T>::zeros(rows);
            v[candidate] = T::one();
            candidate += 1;
            // Two Gram-Schmidt passes.
            for _ in 0..2 {
                for j in 0..basis.ncols() {
                    if j == col {
                        continue;
                    }
                    let proj = basis.column(j).dot(&v);
                    v -= basis.column(j) * proj;
                }
            }
            let norm = v.norm();
            if norm > T::lit(1e-3) {
                basis.set_column(col, &(v / norm));
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, m: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0))
    }

    fn check(a: &Matrix<f64>) {
        let svd = exact_svd(a);
        let k = a.nrows().min(a.ncols());
        assert_eq!(svd.s.len(), k);
        assert!(max_identity_deviation(&(svd.u.transpose() * &svd.u)) < 1e-10);
        assert!(max_identity_deviation(&(svd.v.transpose() * &svd.v)) < 1e-10);
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        assert!((svd.reconstruct() - a).norm() < 1e-10 * (1.0 + a.norm()));
    }

    #[test]
    fn jacobi_svd_tall_wide_square() {
        check(&random(12, 7, 1));
        check(&random(7, 12, 2));
        check(&random(9, 9, 3));
        check(&random(1, 5, 4));
        check(&random(5, 1, 5));
    }

    #[test]
    fn jacobi_svd_matches_nalgebra_singular_values() {
        let a = random(30, 20, 9);
        let ours = exact_svd(&a);
        let mut theirs: Vec<f64> = a
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        theirs.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (x, y) in ours.s.iter().zip(&theirs) {
            assert!((x - y).abs() < 1e-12 * theirs[0]);
        }
    }

    #[test]
    fn jacobi_svd_rank_deficient_and_zero() {
        let u = random(10, 2, 11);
        let v = random(6, 2, 12);
        check(&(&u * v.transpose()));
        check(&Matrix::zeros(6, 4));
        let z = exact_svd(&Matrix::<f64>::zeros(4, 6));
        assert!(z.s.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn jacobi_svd_f32() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Matrix::<f32>::from_fn(8, 5, |_, _| rng.random_range(-1.0f32..1.0));
        let svd = exact_svd(&a);
        assert!((svd.reconstruct() - &a).norm() < 1e-4);
    }

    #[test]
    fn qr_basis_is_orthonormal() {
        let q = orthonormal_basis(random(20, 6, 5));
        assert_eq!(q.shape(), (20, 6));
        assert!(max_identity_deviation(&(q.transpose() * &q)) < 1e-12);
    }
}
