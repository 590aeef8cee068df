//! Small dense complex matrix kernels.
//!
//! The transport engine factorises block-tridiagonal systems whose blocks
//! stay below ~100×100, so a hand-rolled partially pivoted LU is both fast
//! enough and fully deterministic (no BLAS threading, no platform variance).

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

pub type Cx = Complex64;
pub type CMat = Array2<Cx>;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("matrix is numerically singular")]
pub struct SingularMatrix;

/// n×n identity.
pub fn eye(n: usize) -> CMat {
    Array2::from_diag_elem(n, Cx::new(1.0, 0.0))
}

/// Conjugate transpose.
pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

/// Largest element magnitude.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// Largest |a − b| entry. Panics on shape mismatch.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()))
}

/// Hermiticity residual max |a − a†|.
pub fn herm_residual(a: &CMat) -> f64 {
    max_abs_diff(a, &dagger(a))
}

/// LU factorisation with partial pivoting, kept for repeated solves.
pub struct Lu {
    lu: CMat,
    perm: Vec<usize>,
}

pub fn lu_factor(a: &CMat) -> Result<Lu, SingularMatrix> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "LU requires a square matrix");
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = lu[[k, k]].norm();
        for r in k + 1..n {
            let v = lu[[r, k]].norm();
            if v > best {
                best = v;
                p = r;
            }
        }
        if !(best > 0.0) || !best.is_finite() {
            return Err(SingularMatrix);
        }
        if p != k {
            perm.swap(p, k);
            for c in 0..n {
                let t = lu[[k, c]];
                lu[[k, c]] = lu[[p, c]];
                lu[[p, c]] = t;
            }
        }
        let piv = lu[[k, k]];
        for r in k + 1..n {
            let f = lu[[r, k]] / piv;
            lu[[r, k]] = f;
            if f != Cx::new(0.0, 0.0) {
                for c in k + 1..n {
                    let sub = f * lu[[k, c]];
                    lu[[r, c]] -= sub;
                }
            }
        }
    }
    Ok(Lu { lu, perm })
}

impl Lu {
    /// Solve A·X = B for X with B given column-wise.
    pub fn solve(&self, b: &CMat) -> CMat {
        let n = self.lu.nrows();
        assert_eq!(b.nrows(), n);
        let m = b.ncols();
        let mut x = Array2::from_elem((n, m), Cx::new(0.0, 0.0));
        for r in 0..n {
            for c in 0..m {
                x[[r, c]] = b[[self.perm[r], c]];
            }
        }
        // forward substitution, unit lower triangle
        for k in 0..n {
            for r in k + 1..n {
                let f = self.lu[[r, k]];
                if f != Cx::new(0.0, 0.0) {
                    for c in 0..m {
                        let sub = f * x[[k, c]];
                        x[[r, c]] -= sub;
                    }
                }
            }
        }
        // back substitution
        for k in (0..n).rev() {
            let piv = self.lu[[k, k]];
            for c in 0..m {
                x[[k, c]] /= piv;
            }
            for r in 0..k {
                let f = self.lu[[r, k]];
                if f != Cx::new(0.0, 0.0) {
                    for c in 0..m {
                        let sub = f * x[[k, c]];
                        x[[r, c]] -= sub;
                    }
                }
            }
        }
        x
    }
}

/// Matrix inverse through the pivoted LU.
pub fn invert(a: &CMat) -> Result<CMat, SingularMatrix> {
    let lu = lu_factor(a)?;
    Ok(lu.solve(&eye(a.nrows())))
}

/// Solve A·X = B once.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat, SingularMatrix> {
    Ok(lu_factor(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_mat(n: usize, seed: &mut u64) -> CMat {
        // xorshift; tests must not depend on external RNG crates here
        let mut next = || {
            *seed ^= *seed << 13;
            *seed ^= *seed >> 7;
            *seed ^= *seed << 17;
            (*seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        Array2::from_shape_fn((n, n), |_| Cx::new(next(), next()))
    }

    #[test]
    fn inverse_round_trip() {
        let mut seed = 0x9e3779b97f4a7c15;
        for n in [1, 2, 3, 5, 8, 13, 21] {
            let a = rand_mat(n, &mut seed);
            let inv = invert(&a).expect("random matrix should be regular");
            let p = a.dot(&inv);
            assert!(max_abs_diff(&p, &eye(n)) < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn solve_matches_inverse() {
        let mut seed = 12345;
        let a = rand_mat(6, &mut seed);
        let b = rand_mat(6, &mut seed);
        let x = solve(&a, &b).unwrap();
        let x2 = invert(&a).unwrap().dot(&b);
        assert!(max_abs_diff(&x, &x2) < 1e-11);
    }

    #[test]
    fn singular_is_reported() {
        let a = Array2::from_elem((3, 3), Cx::new(1.0, 0.0));
        assert_eq!(invert(&a), Err(SingularMatrix));
    }

    #[test]
    fn dagger_is_involutive() {
        let mut seed = 777;
        let a = rand_mat(4, &mut seed);
        assert_eq!(max_abs_diff(&dagger(&dagger(&a)), &a), 0.0);
    }
}
