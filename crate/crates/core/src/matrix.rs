//! Dense symmetric matrices and the Cholesky machinery built on them.
//!
//! Storage is a full row-major `p × p` buffer. Every mutator writes both
//! `(i, j)` and `(j, i)`, so symmetry holds structurally.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Sub};

use crate::error::{Error, Result};

/// Relative pivot tolerance for the positive-definiteness test.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = d;
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle (`i <= j`).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix from full rows, rejecting input that is not symmetric.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (rows[i][j], rows[j][i]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    /// Symmetrizes a full row-major buffer as `(A + Aᵀ) / 2`.
    pub fn from_full_symmetrized(dim: usize, full: &[f64]) -> Self {
        assert_eq!(full.len(), dim * dim);
        Self::from_fn(dim, |i, j| 0.5 * (full[i * dim + j] + full[j * dim + i]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] += v;
        if i != j {
            self.data[j * self.dim + i] += v;
        }
    }

    /// Row-major view of all `p²` entries.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `tr(self · other)`, which for symmetric operands is the entrywise inner product.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Row-major product `self · other`, which is generally not symmetric.
    pub fn matmul(&self, other: &SymMatrix) -> Vec<f64> {
        let p = self.dim;
        let mut out = vec![0.0; p * p];
        for i in 0..p {
            for k in 0..p {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let row = other.row(k);
                let dst = &mut out[i * p..(i + 1) * p];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    /// Largest absolute eigenvalue.
    pub fn spectral(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn norms(&self) -> Norms {
        Norms {
            frobenius: self.frobenius(),
            max_abs: self.max_abs(),
            spectral: self.spectral(),
        }
    }

    /// Eigenvalues in ascending order (cyclic Jacobi).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut vals = jacobi_eigenvalues(self.dim, self.data.clone());
        vals.sort_by(f64::total_cmp);
        vals
    }

    pub fn cholesky(&self) -> Result<CholeskyFactor> {
        CholeskyFactor::new(self)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_ok()
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;

    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, rhs.dim);
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;

    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, rhs.dim);
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub frobenius: f64,
    pub max_abs: f64,
    pub spectral: f64,
}

fn jacobi_eigenvalues(n: usize, mut a: Vec<f64>) -> Vec<f64> {
    let total: f64 = a.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return vec![0.0; n];
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off <= 1e-30 * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Dot product with four partial sums.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Lower-triangular `L` with `L Lᵀ = A` and a strictly positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    dim: usize,
    lower: Vec<f64>,
}

impl CholeskyFactor {
    /// Fails when a pivot drops to `PIVOT_TOLERANCE · max diag` or below.
    pub fn new(m: &SymMatrix) -> Result<Self> {
        let n = m.dim;
        let max_diag = (0..n).fold(0.0_f64, |acc, i| acc.max(m.get(i, i)));
        if !(max_diag > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: 0 });
        }
        let tol = PIVOT_TOLERANCE * max_diag;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let d = m.get(j, j) - dot(&l[j * n..j * n + j], &l[j * n..j * n + j]);
            if !(d > tol) {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let djj = libm::sqrt(d);
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let (head, tail) = l.split_at_mut(i * n);
                let s = m.get(i, j) - dot(&tail[..j], &head[j * n..j * n + j]);
                tail[j] = s / djj;
            }
        }
        Ok(Self { dim: n, lower: l })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `L[i][j]` (zero above the diagonal).
    #[inline]
    pub fn lower(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim)
            .map(|i| libm::log(self.lower[i * self.dim + i]))
            .sum::<f64>()
    }

    /// Solves `L y = b` in place.
    pub fn forward_solve(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * b[k];
            }
            b[i] = s / self.lower[i * n + i];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn backward_solve(&self, y: &mut [f64]) {
        let n = self.dim;
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.lower[k * n + i] * y[k];
            }
            y[i] = s / self.lower[i * n + i];
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward_solve(&mut x);
        self.backward_solve(&mut x);
        x
    }

    pub fn inverse(&self) -> SymMatrix {
        let n = self.dim;
        // L⁻¹ column by column, then A⁻¹ = L⁻ᵀ L⁻¹.
        let mut linv = vec![0.0; n * n];
        for c in 0..n {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            self.forward_solve(&mut e);
            for r in 0..n {
                linv[r * n + c] = e[r];
            }
        }
        SymMatrix::from_fn(n, |i, j| {
            let start = i.max(j);
            (start..n).map(|k| linv[k * n + i] * linv[k * n + j]).sum()
        })
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.dim;
        SymMatrix::from_fn(n, |i, j| {
            let upto = i.min(j);
            (0..=upto)
                .map(|k| self.lower[i * n + k] * self.lower[j * n + k])
                .sum()
        })
    }
}

/// Free-function form of [`CholeskyFactor::new`].
pub fn cholesky(m: &SymMatrix) -> Result<CholeskyFactor> {
    CholeskyFactor::new(m)
}

pub fn log_det(f: &CholeskyFactor) -> f64 {
    f.log_det()
}

pub fn inverse(f: &CholeskyFactor) -> SymMatrix {
    f.inverse()
}

pub fn norms(m: &SymMatrix) -> Norms {
    m.norms()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pd(dim: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
        // B Bᵀ + dim · I
        let b: Vec<f64> = (0..dim * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        SymMatrix::from_fn(dim, |i, j| {
            let s: f64 = (0..dim).map(|k| b[i * dim + k] * b[j * dim + k]).sum();
            s + if i == j { dim as f64 * 0.5 } else { 0.0 }
        })
    }

    fn random_sym(dim: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
        SymMatrix::from_fn(dim, |_, _| rng.random_range(-2.0..2.0))
    }

    #[test]
    fn cholesky_identity_and_closed_form() {
        let f = SymMatrix::identity(3).cholesky().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(f.lower(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        let m = SymMatrix::from_rows(&[&[4.0, 2.0], &[2.0, 3.0]]).unwrap();
        let f = m.cholesky().unwrap();
        assert!((f.lower(0, 0) - 2.0).abs() < 1e-15);
        assert!((f.lower(1, 0) - 1.0).abs() < 1e-15);
        assert_eq!(f.lower(0, 1), 0.0);
        assert!((f.lower(1, 1) - libm::sqrt(2.0)).abs() < 1e-15);
    }

    #[test]
    fn cholesky_reconstructs_ar1() {
        let sigma = SymMatrix::from_fn(3, |i, j| libm::pow(0.7, (j - i) as f64));
        let f = sigma.cholesky().unwrap();
        let err = (&f.reconstruct() - &sigma).max_abs();
        assert!(err <= 1e-12, "{err}");
    }

    #[test]
    fn cholesky_reports_failing_pivot() {
        let m = SymMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        assert_eq!(m.cholesky(), Err(Error::NotPositiveDefinite { pivot: 1 }));
        assert_eq!(
            SymMatrix::zeros(2).cholesky(),
            Err(Error::NotPositiveDefinite { pivot: 0 })
        );
    }

    #[test]
    fn rank_one_downdate_past_smallest_eigenvalue_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let m = random_pd(4, &mut rng);
            assert!(m.is_positive_definite());
            // subtract (λ_min + 0.1)·v vᵀ for the matching eigenvector via inverse iteration
            let lmin = m.eigenvalues()[0];
            let shifted = &m - &SymMatrix::identity(4).scaled(lmin - 1e-3);
            let f = shifted.cholesky().unwrap();
            let mut v = vec![1.0, 0.3, -0.2, 0.5];
            for _ in 0..50 {
                v = f.solve(&v);
                let nrm = libm::sqrt(v.iter().map(|x| x * x).sum());
                v.iter_mut().for_each(|x| *x /= nrm);
            }
            let c = lmin + 0.1;
            let down = SymMatrix::from_fn(4, |i, j| m.get(i, j) - c * v[i] * v[j]);
            assert!(down.cholesky().is_err());
        }
    }

    #[test]
    fn log_det_examples() {
        assert_eq!(SymMatrix::identity(4).cholesky().unwrap().log_det(), 0.0);
        let d = SymMatrix::from_diag(&[2.0, 2.0]).cholesky().unwrap().log_det();
        assert!((d - 2.0 * libm::log(2.0)).abs() < 1e-15);
    }

    #[test]
    fn log_det_matches_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_pd(5, &mut rng);
        let ld = m.cholesky().unwrap().log_det();
        let via_eig: f64 = m.eigenvalues().iter().map(|v| libm::log(*v)).sum();
        assert!((ld - via_eig).abs() <= 1e-10);
    }

    #[test]
    fn inverse_examples() {
        let inv = SymMatrix::identity(3).cholesky().unwrap().inverse();
        assert_eq!(inv, SymMatrix::identity(3));
        let inv = SymMatrix::from_diag(&[2.0, 4.0]).cholesky().unwrap().inverse();
        assert!((&inv - &SymMatrix::from_diag(&[0.5, 0.25])).max_abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_pd(6, &mut rng);
        let inv = m.cholesky().unwrap().inverse();
        let prod = m.matmul(&inv);
        let mut err = 0.0_f64;
        for i in 0..6 {
            for j in 0..6 {
                let e = if i == j { 1.0 } else { 0.0 };
                err = err.max((prod[i * 6 + j] - e).abs());
            }
        }
        assert!(err <= 1e-10, "{err}");
    }

    #[test]
    fn log_det_of_inverse_cancels() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let m = random_pd(5, &mut rng);
            let f = m.cholesky().unwrap();
            let inv = f.inverse().cholesky().unwrap();
            assert!((f.log_det() + inv.log_det()).abs() < 1e-8);
        }
    }

    #[test]
    fn norm_examples() {
        let n = SymMatrix::identity(3).norms();
        assert!((n.frobenius - libm::sqrt(3.0)).abs() < 1e-15);
        assert_eq!(n.max_abs, 1.0);
        assert!((n.spectral - 1.0).abs() < 1e-12);
        let z = SymMatrix::zeros(3).norms();
        assert_eq!((z.frobenius, z.max_abs, z.spectral), (0.0, 0.0, 0.0));
    }

    #[test]
    fn norm_chain_on_random_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for k in 0..1000 {
            let p = 1 + k % 6;
            let m = random_sym(p, &mut rng);
            let n = m.norms();
            let slack = 1e-10 * (1.0 + n.frobenius);
            assert!(n.max_abs <= n.spectral + slack);
            assert!(n.spectral <= n.frobenius + slack);
            assert!(n.frobenius <= p as f64 * n.max_abs + slack);
        }
    }

    #[test]
    fn from_rows_rejects_asymmetry() {
        assert!(matches!(
            SymMatrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]),
            Err(Error::NotSymmetric { .. })
        ));
    }
}
