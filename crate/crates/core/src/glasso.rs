//! Graphical lasso with optional support constraints.
//!
//! Minimizes `-log det Ω + tr(Σ̂ Ω) + ρ ‖Ω‖₁` over positive definite `Ω`, where
//! the ℓ₁ norm runs over the full matrix (diagonal once, each off-diagonal pair
//! twice) and entries outside the support are pinned to zero.
//!
//! The solver is exact coordinate descent on the free entries of `Ω`, keeping
//! `W = Ω⁻¹` current through rank-one / rank-two updates. Each coordinate
//! subproblem `t ↦ -log det(Ω + t E) + …` has a closed-form minimizer, so every
//! step decreases the objective and stays inside the positive definite cone.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{Edge, FreeIndexSet, GraphStructure};
use crate::matrix::{CholeskyFactor, SymMatrix};
use crate::score::hessian_from_inverse;

pub const DEFAULT_TOLERANCE: f64 = 1e-7;
pub const DEFAULT_MAX_SWEEPS: usize = 500;

/// Smallest allowed determinant ratio along a coordinate step.
const STEP_DET_FLOOR: f64 = 1e-12;
const NEWTON_STEPS: usize = 50;
const NEWTON_MIN_DECREMENT: f64 = 1e-24;
const NEWTON_FINAL_DECREMENT: f64 = 1e-10;
const PROJECTION_HALVINGS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Target KKT residual.
    pub tol: f64,
    /// Maximum number of coordinate sweeps.
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_SWEEPS,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GlassoProblem<'a> {
    pub sigma_hat: &'a SymMatrix,
    /// Penalty `ρ = λ / n`.
    pub rho: f64,
    /// Allowed off-diagonal entries; `None` leaves every pair free.
    pub support: Option<&'a GraphStructure>,
}

impl<'a> GlassoProblem<'a> {
    pub fn new(sigma_hat: &'a SymMatrix, rho: f64) -> Self {
        Self {
            sigma_hat,
            rho,
            support: None,
        }
    }

    pub fn with_support(mut self, support: &'a GraphStructure) -> Self {
        self.support = Some(support);
        self
    }

    #[inline]
    fn is_free(&self, i: usize, j: usize) -> bool {
        i == j || self.support.is_none_or(|g| g.has_edge(i, j))
    }

    fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidPenalty(self.rho));
        }
        let p = self.sigma_hat.dim();
        if let Some(g) = self.support {
            if g.p() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: g.p(),
                });
            }
        }
        for i in 0..p {
            let s = self.sigma_hat.get(i, i);
            if s < 0.0 || !(s + self.rho > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: i });
            }
        }
        Ok(())
    }

    /// Free off-diagonal coordinates in lexicographic order.
    fn free_edges(&self) -> Vec<Edge> {
        let p = self.sigma_hat.dim();
        match self.support {
            Some(g) => g.edges().collect(),
            None => (0..p)
                .flat_map(|i| ((i + 1)..p).map(move |j| Edge::new(i, j).unwrap()))
                .collect(),
        }
    }

    /// `diag(1 / (σ̂_ii + ρ))`, the exact solution whenever the penalty dominates.
    pub fn diagonal_start(&self) -> SymMatrix {
        let d: Vec<f64> = self
            .sigma_hat
            .diagonal()
            .iter()
            .map(|s| 1.0 / (s + self.rho))
            .collect();
        SymMatrix::from_diag(&d)
    }

    /// Penalized objective; `+∞` outside the positive definite cone.
    pub fn objective(&self, omega: &SymMatrix) -> f64 {
        match omega.cholesky() {
            Ok(f) => self.objective_with_logdet(omega, f.log_det()),
            Err(_) => f64::INFINITY,
        }
    }

    fn objective_with_logdet(&self, omega: &SymMatrix, log_det: f64) -> f64 {
        let p = omega.dim();
        let mut l1 = 0.0;
        for i in 0..p {
            l1 += omega.get(i, i).abs();
            for j in (i + 1)..p {
                l1 += 2.0 * omega.get(i, j).abs();
            }
        }
        -log_det + self.sigma_hat.trace_product(omega) + self.rho * l1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlassoSolution {
    pub omega_star: SymMatrix,
    /// `Ω*⁻¹`, kept because every consumer of a solution needs it.
    pub omega_inverse: SymMatrix,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the start of each sweep and at exit.
    pub objective_trace: Vec<f64>,
}

pub fn solve(problem: &GlassoProblem<'_>, cfg: &SolverConfig) -> Result<GlassoSolution> {
    solve_from(problem, None, cfg)
}

/// Solves starting from `init` when it is positive definite and respects the
/// support; otherwise starts from the diagonal solution.
pub fn solve_from(
    problem: &GlassoProblem<'_>,
    init: Option<&SymMatrix>,
    cfg: &SolverConfig,
) -> Result<GlassoSolution> {
    problem.validate()?;
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidConfig("solver tolerance must be positive"));
    }
    let p = problem.sigma_hat.dim();
    let edges = problem.free_edges();

    let start = init
        .filter(|m| m.dim() == p && respects_support(m, problem))
        .and_then(|m| m.cholesky().ok().map(|f| (m.clone(), f)));
    let (mut omega, mut factor) = match start {
        Some(s) => s,
        None => {
            let d = problem.diagonal_start();
            let f = d.cholesky()?;
            (d, f)
        }
    };

    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let mut w = factor.inverse();
        let objective = problem.objective_with_logdet(&omega, factor.log_det());
        let kkt = kkt_with_inverse(&omega, &w, problem);
        trace.push(objective);
        if kkt <= cfg.tol || iterations >= cfg.max_iter {
            return Ok(GlassoSolution {
                omega_star: omega,
                omega_inverse: w,
                objective,
                kkt_residual: kkt,
                iterations,
                converged: kkt <= cfg.tol,
                objective_trace: trace,
            });
        }
        sweep(problem, &edges, &mut omega, &mut w);
        iterations += 1;
        factor = match omega.cholesky() {
            Ok(f) => f,
            Err(_) => {
                // rounding pushed the iterate onto the cone boundary
                return Err(Error::SolverDiverged {
                    iterations,
                    residual: kkt,
                });
            }
        };
        newton_refine(problem, &edges, &mut omega, &mut factor);
    }
}

/// Newton steps on the smooth problem obtained by freezing the current zero
/// pattern and signs. An entry that reaches zero leaves the active set; only
/// the coordinate sweeps bring entries back in.
fn newton_refine(problem: &GlassoProblem<'_>, edges: &[Edge], omega: &mut SymMatrix, factor: &mut CholeskyFactor) {
    let p = omega.dim();
    let s = problem.sigma_hat;
    let rho = problem.rho;
    for _ in 0..NEWTON_STEPS {
        let w = factor.inverse();
        let active = GraphStructure::from_edges(
            p,
            edges
                .iter()
                .filter(|e| omega.get(e.i(), e.j()) != 0.0)
                .map(|e| (e.i(), e.j())),
        )
        .expect("edges come from a valid graph");
        let index = active.free_index();
        let grad: Vec<f64> = index
            .entries()
            .iter()
            .map(|&(i, j)| {
                if i == j {
                    s.get(i, i) - w.get(i, i) + rho
                } else {
                    2.0 * (s.get(i, j) - w.get(i, j) + rho * omega.get(i, j).signum())
                }
            })
            .collect();
        let Ok(h) = hessian_from_inverse(&w, &index).entries.cholesky() else {
            return;
        };
        let mut dir = h.solve(&grad);
        dir.iter_mut().for_each(|v| *v = -*v);
        let decrement = -grad.iter().zip(&dir).map(|(g, d)| g * d).sum::<f64>();
        if !(decrement > NEWTON_MIN_DECREMENT) {
            return;
        }
        // damped step; the full step is safe once the decrement is small
        let lambda = libm::sqrt(decrement);
        let damped = if lambda < 0.25 { 1.0 } else { 1.0 / (1.0 + lambda) };
        let current = problem.objective_with_logdet(omega, factor.log_det());
        let Some((next, f, crossed)) = projected_step(problem, &index, omega, &dir, damped, current)
            .or_else(|| blocked_step(problem, &index, omega, &dir, damped, current))
        else {
            return;
        };
        *omega = next;
        *factor = f;
        if !crossed && decrement < NEWTON_FINAL_DECREMENT {
            // the next decrement would be of order decrement²
            return;
        }
    }
}

/// `Ω + α d` with every off-diagonal entry that changes sign set to zero,
/// backtracking on `α` until the objective decreases.
fn projected_step(
    problem: &GlassoProblem<'_>,
    index: &FreeIndexSet,
    omega: &SymMatrix,
    dir: &[f64],
    alpha: f64,
    current: f64,
) -> Option<(SymMatrix, CholeskyFactor, bool)> {
    let mut alpha = alpha;
    for _ in 0..PROJECTION_HALVINGS {
        let mut next = omega.clone();
        let mut crossed = false;
        for (k, &(i, j)) in index.entries().iter().enumerate() {
            let x = omega.get(i, j);
            let y = x + alpha * dir[k];
            if i != j && x * y <= 0.0 {
                next.set(i, j, 0.0);
                crossed = true;
            } else {
                next.set(i, j, y);
            }
        }
        if let Ok(f) = next.cholesky() {
            if problem.objective_with_logdet(&next, f.log_det()) < current {
                return Some((next, f, crossed));
            }
        }
        alpha *= 0.5;
    }
    None
}

/// The damped step shortened to stop at the first entry that reaches zero.
fn blocked_step(
    problem: &GlassoProblem<'_>,
    index: &FreeIndexSet,
    omega: &SymMatrix,
    dir: &[f64],
    alpha: f64,
    current: f64,
) -> Option<(SymMatrix, CholeskyFactor, bool)> {
    let mut alpha = alpha;
    let mut blocking = None;
    for (k, &(i, j)) in index.entries().iter().enumerate() {
        let x = omega.get(i, j);
        if i != j && x * (x + alpha * dir[k]) <= 0.0 {
            let hit = -x / dir[k];
            if hit < alpha {
                alpha = hit;
                blocking = Some(k);
            }
        }
    }
    let step: Vec<f64> = dir.iter().map(|d| alpha * d).collect();
    let mut next = index.displace(omega, &step);
    if let Some(k) = blocking {
        let (i, j) = index.entries()[k];
        next.set(i, j, 0.0);
    }
    let f = next.cholesky().ok()?;
    if problem.objective_with_logdet(&next, f.log_det()) > current {
        return None;
    }
    Some((next, f, blocking.is_some()))
}

fn respects_support(m: &SymMatrix, problem: &GlassoProblem<'_>) -> bool {
    let p = m.dim();
    (0..p).all(|i| ((i + 1)..p).all(|j| problem.is_free(i, j) || m.get(i, j) == 0.0))
}

fn sweep(problem: &GlassoProblem<'_>, edges: &[Edge], omega: &mut SymMatrix, w: &mut SymMatrix) {
    let p = omega.dim();
    let s = problem.sigma_hat;
    let rho = problem.rho;
    let mut wi = alloc::vec![0.0; p];
    let mut wj = alloc::vec![0.0; p];

    for i in 0..p {
        let a = w.get(i, i);
        let t = 1.0 / (s.get(i, i) + rho) - 1.0 / a;
        if t == 0.0 {
            continue;
        }
        omega.add_to(i, i, t);
        let scale = t / (1.0 + t * a);
        wi.copy_from_slice(w.row(i));
        for k in 0..p {
            for l in k..p {
                let v = w.get(k, l) - scale * wi[k] * wi[l];
                w.set(k, l, v);
            }
        }
    }

    for e in edges {
        let (i, j) = (e.i(), e.j());
        let a = w.get(i, i);
        let c = w.get(j, j);
        let b = w.get(i, j);
        let x = omega.get(i, j);
        let mut t = off_diagonal_step(a, b, c, x, s.get(i, j), rho);
        if t == 0.0 {
            continue;
        }
        let det_ratio = |t: f64| (1.0 + t * b) * (1.0 + t * b) - t * t * a * c;
        let mut d = det_ratio(t);
        while d < STEP_DET_FLOOR {
            t *= 0.5;
            d = det_ratio(t);
        }
        omega.add_to(i, j, t);
        // Woodbury for Ω + t(e_i e_jᵀ + e_j e_iᵀ)
        wi.copy_from_slice(w.row(i));
        wj.copy_from_slice(w.row(j));
        let f = t / d;
        let (cii, cij, cjj) = (-t * c, 1.0 + t * b, -t * a);
        for k in 0..p {
            for l in k..p {
                let corr = cii * wi[k] * wi[l] + cij * (wi[k] * wj[l] + wj[k] * wi[l]) + cjj * wj[k] * wj[l];
                let v = w.get(k, l) - f * corr;
                w.set(k, l, v);
            }
        }
    }
}

/// Exact minimizer over `t` of
/// `-log[(1 + t b)² - t² a c] + 2 t s + 2 ρ |x + t|`
/// where `a, c, b` are `W_ii, W_jj, W_ij`.
fn off_diagonal_step(a: f64, b: f64, c: f64, x: f64, s: f64, rho: f64) -> f64 {
    let delta = a * c - b * b;
    // root of (b - δ t) / D(t) = κ inside the feasible interval
    let root = |kappa: f64| {
        let disc = libm::sqrt(delta * delta + 4.0 * kappa * kappa * a * c);
        2.0 * (b - kappa) / (delta + 2.0 * kappa * b + disc)
    };
    let t_pos = root(s + rho);
    if x + t_pos > 0.0 {
        return t_pos;
    }
    let t_neg = root(s - rho);
    if x + t_neg < 0.0 {
        return t_neg;
    }
    -x
}

/// Largest violation of the optimality conditions over the free entries:
/// `(Ω⁻¹ - Σ̂)_ii = ρ`, `(Ω⁻¹ - Σ̂)_ij = ρ sign(ω_ij)` on nonzero free entries and
/// `|(Ω⁻¹ - Σ̂)_ij| ≤ ρ` on zero free entries. Returns `+∞` if `solution` is not
/// positive definite.
pub fn kkt_residual(solution: &SymMatrix, problem: &GlassoProblem<'_>) -> f64 {
    match solution.cholesky() {
        Ok(f) => kkt_with_inverse(solution, &f.inverse(), problem),
        Err(_) => f64::INFINITY,
    }
}

fn kkt_with_inverse(omega: &SymMatrix, w: &SymMatrix, problem: &GlassoProblem<'_>) -> f64 {
    let p = omega.dim();
    let s = problem.sigma_hat;
    let rho = problem.rho;
    let mut worst = 0.0_f64;
    for i in 0..p {
        worst = worst.max((w.get(i, i) - s.get(i, i) - rho).abs());
        for j in (i + 1)..p {
            if !problem.is_free(i, j) {
                continue;
            }
            let g = w.get(i, j) - s.get(i, j);
            let x = omega.get(i, j);
            let r = if x != 0.0 {
                (g - rho * x.signum()).abs()
            } else {
                (g.abs() - rho).max(0.0)
            };
            worst = worst.max(r);
        }
    }
    worst
}

/// Threshold below which a solution entry counts as an exact zero.
pub fn zero_threshold(omega: &SymMatrix) -> f64 {
    1e-8 * (1.0 + omega.max_abs())
}

/// Edges of `support` whose solved entry is at most `threshold` in magnitude.
pub fn zero_set(solution: &GlassoSolution, support: &GraphStructure, threshold: f64) -> Vec<Edge> {
    support
        .edges()
        .filter(|e| solution.omega_star.get(e.i(), e.j()).abs() <= threshold)
        .collect()
}

/// Graph of entries of `omega` exceeding `threshold` in magnitude.
pub fn support_of(omega: &SymMatrix, threshold: f64) -> GraphStructure {
    let p = omega.dim();
    let mut g = GraphStructure::empty(p);
    for i in 0..p {
        for j in (i + 1)..p {
            if omega.get(i, j).abs() > threshold {
                g.insert(Edge::new(i, j).unwrap());
            }
        }
    }
    g
}
