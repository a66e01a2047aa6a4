//! Brute-force reference computations used to check the Laplace scorer.
//!
//! Nothing here is on the production path: the marginal-integral estimator is
//! guarded to `p ≤ 4` and exists so the approximations in [`crate::score`] can
//! be measured against an independent route.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::glasso::{self, GlassoProblem, SolverConfig};
use crate::graph::{FreeIndexSet, GraphStructure};
use crate::matrix::{CholeskyFactor, SymMatrix};
use crate::score::{hessian_from_inverse, HessianMatrix};

pub const MAX_ORACLE_DIM: usize = 4;
pub const MIN_ORACLE_DRAWS: usize = 10_000;
pub const DEFAULT_BATCH: usize = 10_000;
/// Proposal covariance is this multiple of the Laplace covariance `(2/n) H⁻¹`.
pub const PROPOSAL_INFLATION: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralEstimate {
    /// Estimate of `log ∫ exp{-n h(Ω)/2} dΩ` over the free coordinates.
    pub log_value: f64,
    /// Delta-method standard error of `log_value`.
    pub mc_standard_error: f64,
    pub draws: usize,
}

/// Running sums of importance weights, held relative to `shift` so they stay finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightStats {
    pub count: usize,
    pub shift: f64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl WeightStats {
    pub const EMPTY: WeightStats = WeightStats {
        count: 0,
        shift: f64::NEG_INFINITY,
        sum: 0.0,
        sum_sq: 0.0,
    };

    fn push(&mut self, log_w: f64) {
        self.count += 1;
        if log_w == f64::NEG_INFINITY {
            return;
        }
        if log_w > self.shift {
            let r = libm::exp(self.shift - log_w);
            self.sum *= r;
            self.sum_sq *= r * r;
            self.shift = log_w;
        }
        let v = libm::exp(log_w - self.shift);
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(self, other: WeightStats) -> WeightStats {
        let shift = self.shift.max(other.shift);
        if shift == f64::NEG_INFINITY {
            return WeightStats {
                count: self.count + other.count,
                ..WeightStats::EMPTY
            };
        }
        let ra = libm::exp(self.shift - shift);
        let rb = libm::exp(other.shift - shift);
        WeightStats {
            count: self.count + other.count,
            shift,
            sum: self.sum * ra + other.sum * rb,
            sum_sq: self.sum_sq * ra * ra + other.sum_sq * rb * rb,
        }
    }

    pub fn estimate(&self) -> IntegralEstimate {
        let n = self.count as f64;
        let mean = self.sum / n;
        let second = self.sum_sq / n;
        let var = (second - mean * mean).max(0.0);
        let se_rel = libm::sqrt(var / n) / mean;
        IntegralEstimate {
            log_value: self.shift + libm::log(mean),
            mc_standard_error: se_rel,
            draws: self.count,
        }
    }
}

/// Merges per-batch statistics with a fixed pairwise tree, so the result does
/// not depend on how batches were scheduled.
pub fn merge_batches(stats: &[WeightStats]) -> WeightStats {
    match stats.len() {
        0 => WeightStats::EMPTY,
        1 => stats[0],
        len => {
            let mid = len / 2;
            merge_batches(&stats[..mid]).merge(merge_batches(&stats[mid..]))
        }
    }
}

/// Everything needed to draw importance samples for one graph.
#[derive(Debug, Clone)]
pub struct ImportancePlan {
    graph: GraphStructure,
    sigma_hat: SymMatrix,
    n: usize,
    rate: f64,
    center: SymMatrix,
    index: FreeIndexSet,
    hessian_factor: CholeskyFactor,
    scale: f64,
    log_q_const: f64,
    seed: u64,
    draws: usize,
    batch: usize,
}

impl ImportancePlan {
    pub fn new(
        g: &GraphStructure,
        sigma_hat: &SymMatrix,
        n: usize,
        lambda: f64,
        draws: usize,
        seed: u64,
    ) -> Result<Self> {
        let p = sigma_hat.dim();
        if p > MAX_ORACLE_DIM {
            return Err(Error::GuardViolated("oracle integrals are limited to p <= 4"));
        }
        if draws < MIN_ORACLE_DRAWS {
            return Err(Error::GuardViolated("oracle integrals need at least 10^4 draws"));
        }
        if g.p() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: g.p(),
            });
        }
        let rate = lambda / n as f64;
        let cfg = SolverConfig {
            tol: 1e-11,
            max_iter: 5000,
        };
        let sol = glasso::solve(&GlassoProblem::new(sigma_hat, rate).with_support(g), &cfg)?;
        let index = g.free_index();
        let hessian = hessian_from_inverse(&sol.omega_inverse, &index);
        let hessian_factor = hessian
            .entries
            .cholesky()
            .map_err(|_| Error::DegenerateProposal)?;
        let scale = PROPOSAL_INFLATION * 2.0 / n as f64;
        let d = index.len() as f64;
        let log_q_const = -0.5 * d * libm::log(2.0 * core::f64::consts::PI * scale)
            + 0.5 * hessian_factor.log_det();
        Ok(Self {
            graph: g.clone(),
            sigma_hat: sigma_hat.clone(),
            n,
            rate,
            center: sol.omega_star,
            index,
            hessian_factor,
            scale,
            log_q_const,
            seed,
            draws,
            batch: DEFAULT_BATCH,
        })
    }

    pub fn center(&self) -> &SymMatrix {
        &self.center
    }

    pub fn batch_count(&self) -> usize {
        self.draws.div_ceil(self.batch)
    }

    /// `-n h(Ω)/2`, or `-∞` outside the positive definite cone.
    fn log_integrand(&self, omega: &SymMatrix) -> f64 {
        let Ok(f) = omega.cholesky() else {
            return f64::NEG_INFINITY;
        };
        let p = omega.dim();
        let diag: f64 = (0..p).map(|i| omega.get(i, i)).sum();
        let off: f64 = self.graph.edges().map(|e| omega.get(e.i(), e.j()).abs()).sum();
        let h = -f.log_det() + self.sigma_hat.trace_product(omega) + 2.0 * self.rate * off + self.rate * diag;
        -0.5 * self.n as f64 * h
    }

    /// Weight statistics of batch `b`; each batch has its own RNG stream.
    pub fn run_batch(&self, b: usize) -> WeightStats {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(b as u64);
        let start = b * self.batch;
        let len = self.batch.min(self.draws.saturating_sub(start));
        let d = self.index.len();
        let sd = libm::sqrt(self.scale);
        let mut z = vec![0.0; d];
        let mut stats = WeightStats::EMPTY;
        for _ in 0..len {
            let mut norm_sq = 0.0;
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
                norm_sq += *v * *v;
            }
            let log_q = self.log_q_const - 0.5 * norm_sq;
            // L⁻ᵀ z has covariance H⁻¹
            self.hessian_factor.backward_solve(&mut z);
            z.iter_mut().for_each(|v| *v *= sd);
            let omega = self.index.displace(&self.center, &z);
            stats.push(self.log_integrand(&omega) - log_q);
        }
        stats
    }

    pub fn run(&self) -> IntegralEstimate {
        let stats: Vec<WeightStats> = (0..self.batch_count()).map(|b| self.run_batch(b)).collect();
        merge_batches(&stats).estimate()
    }
}

/// Importance-sampling estimate of `log ∫_{M⁺} exp{-n h(Ω)/2} dΩ` over the free
/// coordinates of `g`, with a Gaussian proposal centered at the constrained
/// glasso solution. Draws outside the cone carry zero weight.
pub fn mc_marginal(
    g: &GraphStructure,
    sigma_hat: &SymMatrix,
    n: usize,
    lambda: f64,
    draws: usize,
    seed: u64,
) -> Result<IntegralEstimate> {
    Ok(ImportancePlan::new(g, sigma_hat, n, lambda, draws, seed)?.run())
}

/// `-log det Ω`, the only curved part of `h`.
fn neg_log_det(m: &SymMatrix) -> Result<f64> {
    Ok(-m.cholesky()?.log_det())
}

/// Central second differences of the smooth part of `h` over `index`.
pub fn fd_hessian(omega: &SymMatrix, index: &FreeIndexSet, step: f64) -> Result<HessianMatrix> {
    let d = index.len();
    let f0 = neg_log_det(omega)?;
    let eval = |moves: &[(usize, f64)]| -> Result<f64> {
        let mut u = vec![0.0; d];
        for &(k, v) in moves {
            u[k] += v;
        }
        neg_log_det(&index.displace(omega, &u))
    };
    let mut full = vec![0.0; d * d];
    for a in 0..d {
        let fp = eval(&[(a, step)])?;
        let fm = eval(&[(a, -step)])?;
        full[a * d + a] = (fp - 2.0 * f0 + fm) / (step * step);
        for b in (a + 1)..d {
            let fpp = eval(&[(a, step), (b, step)])?;
            let fpm = eval(&[(a, step), (b, -step)])?;
            let fmp = eval(&[(a, -step), (b, step)])?;
            let fmm = eval(&[(a, -step), (b, -step)])?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * step * step);
            full[a * d + b] = v;
            full[b * d + a] = v;
        }
    }
    Ok(HessianMatrix {
        index: index.clone(),
        entries: SymMatrix::from_full_symmetrized(d, &full),
    })
}

/// Squared Hellinger distance between `N(0, Ω₁⁻¹)` and `N(0, Ω₂⁻¹)`, from the
/// eigenvalues `d_i` of `Ω₁^{-1/2} Ω₂ Ω₁^{-1/2}`:
/// `2 (1 - ∏ d_i^{-1/4} / ∏ {(1 + d_i⁻¹)/2}^{1/2})`.
pub fn hellinger_sq(omega1: &SymMatrix, omega2: &SymMatrix) -> Result<f64> {
    let p = omega1.dim();
    if omega2.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: omega2.dim(),
        });
    }
    let l = omega1.cholesky()?;
    omega2.cholesky()?;
    // L⁻¹ Ω₂ L⁻ᵀ is congruent-similar to Ω₁^{-1/2} Ω₂ Ω₁^{-1/2}
    let mut cols = vec![0.0; p * p];
    for c in 0..p {
        let mut col: Vec<f64> = (0..p).map(|r| omega2.get(r, c)).collect();
        l.forward_solve(&mut col);
        for r in 0..p {
            cols[r * p + c] = col[r];
        }
    }
    let mut full = vec![0.0; p * p];
    for r in 0..p {
        let mut row: Vec<f64> = cols[r * p..(r + 1) * p].to_vec();
        l.forward_solve(&mut row);
        full[r * p..(r + 1) * p].copy_from_slice(&row);
    }
    let a = SymMatrix::from_full_symmetrized(p, &full);
    let log_ratio: f64 = a
        .eigenvalues()
        .iter()
        .map(|&d| -0.25 * libm::log(d) - 0.5 * libm::log(0.5 * (1.0 + 1.0 / d)))
        .sum();
    Ok((2.0 * (1.0 - libm::exp(log_ratio))).clamp(0.0, 2.0))
}

/// Taylor remainder of the smooth part of `h` around `center` along `delta`
/// (free-coordinate values in `index` order): `s(Ω+Δ) - s(Ω) - ∇s·Δ - ½ Δᵀ H Δ`
/// with `s(Ω) = -log det Ω + tr(Σ̂Ω)`.
pub fn taylor_remainder(
    center: &SymMatrix,
    sigma_hat: &SymMatrix,
    index: &FreeIndexSet,
    delta: &[f64],
) -> Result<f64> {
    let smooth = |m: &SymMatrix| -> Result<f64> { Ok(neg_log_det(m)? + sigma_hat.trace_product(m)) };
    let w = center.cholesky()?.inverse();
    let h = hessian_from_inverse(&w, index);
    let mut grad_dot = 0.0;
    for (&(i, j), &u) in index.entries().iter().zip(delta) {
        let mult = if i == j { 1.0 } else { 2.0 };
        grad_dot += mult * (sigma_hat.get(i, j) - w.get(i, j)) * u;
    }
    let d = delta.len();
    let mut quad = 0.0;
    for a in 0..d {
        for b in 0..d {
            quad += delta[a] * h.entries.get(a, b) * delta[b];
        }
    }
    let moved = index.displace(center, delta);
    Ok(smooth(&moved)? - smooth(center)? - grad_dot - 0.5 * quad)
}

/// Least-squares fit of `|R| ≈ ½ (p+s) ‖Δ‖² (C₁ ‖Δ‖ + C₂ ‖Δ‖²)` from
/// `(‖Δ‖₂, R)` samples; returns `(C₁, C₂)`.
pub fn fit_remainder_constants(samples: &[(f64, f64)], free_dim: usize) -> (f64, f64) {
    // y = C1 x + C2 x² with y = |R| / (½ (p+s) x²)
    let (mut sxx, mut sxy, mut sx3, mut sx4, mut sx2y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, r) in samples {
        let y = r.abs() / (0.5 * free_dim as f64 * x * x);
        sxx += x * x;
        sxy += x * y;
        sx3 += x * x * x;
        sx4 += x * x * x * x;
        sx2y += x * x * y;
    }
    let det = sxx * sx4 - sx3 * sx3;
    if det.abs() < 1e-300 {
        return (sxy / sxx, 0.0);
    }
    ((sxy * sx4 - sx3 * sx2y) / det, (sxx * sx2y - sx3 * sxy) / det)
}
