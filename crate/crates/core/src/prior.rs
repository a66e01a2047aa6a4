//! Prior mass of a graph structure.
//!
//! Edges are a priori i.i.d. Bernoulli(`q`), conditioned on the edge count not
//! exceeding a cap. The cap is either a fixed `r̄` or a random `R̄`; in the
//! latter case the prior carries the factor `P(R̄ ≥ #Γ)`. Given the graph, the
//! free entries of `Ω` carry Laplace(`λ`) off-diagonal and Exponential(`λ/2`)
//! diagonal densities, whose normalizing constants contribute
//! `(λ/2)^{p + #Γ}`.

use crate::error::{Error, Result};
use crate::graph::{pair_count, GraphStructure};

/// Edge-count truncation of the graph prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// `#Γ ≤ r_bar` with certainty.
    HardCap { r_bar: usize },
    /// Random cap with `P(R̄ = m) ∝ exp(-a2 · m log m)` on `1..=p(p-1)/2`.
    ///
    /// This law meets the tail requirement `P(R̄ > a1 m) ≤ exp(-a2 m log m)` for
    /// any `a1 ≥ 1`; `a1` is carried for configuration round-tripping.
    Hierarchical { a1: f64, a2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphPrior {
    /// Edge inclusion probability, in `(0, 1/2)`.
    pub q: f64,
    /// Scale `λ` of the entry priors; the glasso penalty is `ρ = λ / n`.
    pub lambda: f64,
    pub truncation: Truncation,
}

pub const DEFAULT_Q: f64 = 0.4;
pub const DEFAULT_RHO: f64 = 0.5;

impl GraphPrior {
    pub fn new(q: f64, lambda: f64, truncation: Truncation) -> Result<Self> {
        if !(q > 0.0 && q < 0.5) {
            return Err(Error::InvalidPrior("q must lie in (0, 1/2)"));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidPrior("lambda must be positive"));
        }
        if let Truncation::Hierarchical { a1, a2 } = truncation {
            if !(a1 > 0.0 && a2 > 0.0) {
                return Err(Error::InvalidPrior("a1 and a2 must be positive"));
            }
        }
        Ok(Self {
            q,
            lambda,
            truncation,
        })
    }

    /// Prior for a sample of size `n` with glasso penalty `rho` (`λ = n ρ`).
    pub fn with_penalty(n: usize, rho: f64, q: f64, truncation: Truncation) -> Result<Self> {
        Self::new(q, n as f64 * rho, truncation)
    }

    /// Glasso penalty `λ / n`.
    pub fn rho(&self, n: usize) -> f64 {
        self.lambda / n as f64
    }

    /// Largest edge count with positive prior mass on `p` vertices.
    pub fn max_edges(&self, p: usize) -> usize {
        match self.truncation {
            Truncation::HardCap { r_bar } => r_bar.min(pair_count(p)),
            Truncation::Hierarchical { .. } => pair_count(p),
        }
    }

    /// `log β(Γ)` for a graph with `edges` edges on `p` vertices.
    pub fn log_beta(&self, p: usize, edges: usize) -> f64 {
        match self.truncation {
            Truncation::HardCap { r_bar } => {
                if edges <= r_bar {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Truncation::Hierarchical { a2, .. } => log_cap_survival(a2, pair_count(p), edges),
        }
    }
}

/// `log P(R̄ ≥ k)` for `P(R̄ = m) ∝ exp(-a2 m log m)`, `m = 1..=max`.
fn log_cap_survival(a2: f64, max: usize, k: usize) -> f64 {
    if k <= 1 {
        return 0.0;
    }
    if k > max {
        return f64::NEG_INFINITY;
    }
    let log_w = |m: usize| {
        let m = m as f64;
        -a2 * m * libm::log(m)
    };
    let lse = |lo: usize| {
        let top = (lo..=max).map(log_w).fold(f64::NEG_INFINITY, f64::max);
        top + libm::log((lo..=max).map(|m| libm::exp(log_w(m) - top)).sum::<f64>())
    };
    lse(k) - lse(1)
}

/// Log prior terms of a graph. Both are `-∞` outside the truncation support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPriorMass {
    /// `#Γ log q + (C(p,2) - #Γ) log(1-q) + log β(Γ)`.
    pub log_gamma_prior: f64,
    /// `log_gamma_prior + (p + #Γ) log(λ/2)`; the shared `(2π)^{np/2}` is dropped.
    pub log_c_gamma: f64,
}

impl LogPriorMass {
    pub fn is_supported(&self) -> bool {
        self.log_c_gamma > f64::NEG_INFINITY
    }
}

pub fn log_prior(prior: &GraphPrior, g: &GraphStructure) -> LogPriorMass {
    let p = g.p();
    let k = g.edge_count() as f64;
    let pairs = pair_count(p) as f64;
    let log_beta = prior.log_beta(p, g.edge_count());
    if log_beta == f64::NEG_INFINITY {
        return LogPriorMass {
            log_gamma_prior: f64::NEG_INFINITY,
            log_c_gamma: f64::NEG_INFINITY,
        };
    }
    let log_gamma_prior = k * libm::log(prior.q) + (pairs - k) * libm::log(1.0 - prior.q) + log_beta;
    let log_c_gamma = log_gamma_prior + (p as f64 + k) * libm::log(prior.lambda / 2.0);
    LogPriorMass {
        log_gamma_prior,
        log_c_gamma,
    }
}

/// Edge cap `⌈2 (p + s_guess) log p / log n⌉`, capped at `p(p-1)/2`.
pub fn default_rbar(n: usize, p: usize, s_guess: usize) -> usize {
    let pairs = pair_count(p);
    if n <= 1 {
        return pairs;
    }
    let raw = 2.0 * (p + s_guess) as f64 * libm::log(p as f64) / libm::log(n as f64);
    let r = libm::ceil(raw - 1e-9).max(0.0);
    if r >= pairs as f64 {
        pairs
    } else {
        r as usize
    }
}
