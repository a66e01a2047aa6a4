//! Laplace-approximate log posterior scores of graph structures.
//!
//! For a graph `Γ` with free coordinates `𝒱_Γ` (diagonals plus edges) the
//! marginal posterior mass is
//!
//! `C_Γ ∫ exp{-n h(Ω)/2} dΩ_𝒱`,
//! `h(Ω) = -log det Ω + tr(Σ̂Ω) + (2λ/n) Σ_{edges} |ω_ij| + (λ/n) Σ_i ω_ii`,
//!
//! and `h` is minimized by the support-constrained graphical lasso at
//! `ρ = λ/n`. Expanding to second order around that minimizer `Ω*` gives
//!
//! `log p*(Γ | X) = log C_Γ - n h(Ω*)/2 + (#𝒱_Γ/2) log(4π/n) - ½ log det H`,
//!
//! with `H[(i,j),(l,m)] = tr(Ω*⁻¹ E_ij Ω*⁻¹ E_lm)`. The `4π/n` factor is the
//! Gaussian integral of `exp(-(n/4) uᵀ H u)`.
//!
//! A graph whose solution has an exact zero on one of its edges is non-regular:
//! the expansion point is a kink of `h`. Such a graph is scored as its regular
//! submodel (the same graph minus the zeroed edges), which shares the solution.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::glasso::{self, GlassoProblem, GlassoSolution, SolverConfig};
use crate::graph::{pair_count, Edge, FreeIndexSet, GraphStructure};
use crate::matrix::SymMatrix;
use crate::prior::{log_prior, GraphPrior};

/// `log(4π)`; the per-coordinate Laplace volume is `(4π/n)^{1/2}`.
pub const LOG_FOUR_PI: f64 = 2.531_024_246_969_290_7;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelScore {
    /// The regular graph the score belongs to.
    pub graph: GraphStructure,
    /// `log C_Γ` up to a model-independent constant.
    pub log_prior: f64,
    /// `-n h(Ω*) / 2`.
    pub log_fit: f64,
    /// `(#𝒱_Γ / 2) log(4π / n)`.
    pub dims_term: f64,
    pub log_det_hessian: f64,
    pub total: f64,
    /// False when the requested graph had zeroed edges and was reduced.
    pub regular: bool,
    /// The requested graph, when it was reduced to `graph`.
    pub reduced_from: Option<GraphStructure>,
}

/// A score together with the glasso solution it was expanded around.
#[derive(Debug, Clone)]
pub struct ScoredModel {
    pub score: ModelScore,
    pub solution: GlassoSolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianMatrix {
    pub index: FreeIndexSet,
    pub entries: SymMatrix,
}

impl HessianMatrix {
    pub fn log_det(&self) -> Result<f64> {
        Ok(self.entries.cholesky()?.log_det())
    }
}

/// `h(Ω)` evaluated directly. Entries of `omega` outside `g` must be zero.
pub fn h_value(
    omega: &SymMatrix,
    sigma_hat: &SymMatrix,
    lambda: f64,
    n: usize,
    g: &GraphStructure,
) -> Result<f64> {
    let log_det = omega.cholesky()?.log_det();
    let rate = lambda / n as f64;
    let diag: f64 = (0..omega.dim()).map(|i| omega.get(i, i)).sum();
    let off: f64 = g.edges().map(|e| omega.get(e.i(), e.j()).abs()).sum();
    Ok(-log_det + sigma_hat.trace_product(omega) + 2.0 * rate * off + rate * diag)
}

/// Hessian of the smooth part of `h` over the coordinates in `index`.
pub fn hessian_at(omega: &SymMatrix, index: &FreeIndexSet) -> Result<HessianMatrix> {
    let w = omega.cholesky()?.inverse();
    Ok(hessian_from_inverse(&w, index))
}

/// Same as [`hessian_at`] given `W = Ω⁻¹`.
///
/// `tr(W E_ij W E_lm) = s_ij s_lm (W_il W_jm + W_im W_jl)` with `s = √2` for
/// off-diagonal pairs and `1/√2` for diagonals.
pub fn hessian_from_inverse(w: &SymMatrix, index: &FreeIndexSet) -> HessianMatrix {
    let e = index.entries();
    let entries = SymMatrix::from_fn(e.len(), |a, b| {
        let (i, j) = e[a];
        let (l, m) = e[b];
        let base = w.get(i, l) * w.get(j, m) + w.get(i, m) * w.get(j, l);
        match (i == j, l == m) {
            (false, false) => 2.0 * base,
            (true, true) => 0.5 * base,
            _ => base,
        }
    });
    HessianMatrix {
        index: index.clone(),
        entries,
    }
}

pub fn score_model(
    g: &GraphStructure,
    sigma_hat: &SymMatrix,
    n: usize,
    prior: &GraphPrior,
    cfg: &SolverConfig,
) -> Result<ModelScore> {
    score_model_from(g, sigma_hat, n, prior, cfg, None).map(|s| s.score)
}

/// [`score_model`] with an optional warm start for the glasso solve.
pub fn score_model_from(
    g: &GraphStructure,
    sigma_hat: &SymMatrix,
    n: usize,
    prior: &GraphPrior,
    cfg: &SolverConfig,
    init: Option<&SymMatrix>,
) -> Result<ScoredModel> {
    let p = sigma_hat.dim();
    if g.p() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: g.p(),
        });
    }
    if n < 2 {
        return Err(Error::InvalidConfig("sample size must be at least 2"));
    }
    let rho = prior.rho(n);
    let mut graph = g.clone();
    let mut warm = init.cloned();
    let mut reduced = false;
    let solution = loop {
        let problem = GlassoProblem::new(sigma_hat, rho).with_support(&graph);
        let sol = glasso::solve_from(&problem, warm.as_ref(), cfg)?;
        if !sol.converged {
            return Err(Error::SolverDiverged {
                iterations: sol.iterations,
                residual: sol.kkt_residual,
            });
        }
        let zeros = glasso::zero_set(&sol, &graph, glasso::zero_threshold(&sol.omega_star));
        if zeros.is_empty() {
            break sol;
        }
        reduced = true;
        graph = graph.without(&zeros);
        let mut next = sol.omega_star;
        for e in &zeros {
            next.set(e.i(), e.j(), 0.0);
        }
        warm = Some(next);
    };

    let index = graph.free_index();
    let hessian = hessian_from_inverse(&solution.omega_inverse, &index);
    let log_det_hessian = hessian.log_det()?;
    let log_prior = log_prior(prior, &graph).log_c_gamma;
    let log_fit = -0.5 * n as f64 * solution.objective;
    let dims_term = 0.5 * index.len() as f64 * (LOG_FOUR_PI - libm::log(n as f64));
    let total = log_prior + log_fit + dims_term - 0.5 * log_det_hessian;
    Ok(ScoredModel {
        score: ModelScore {
            graph,
            log_prior,
            log_fit,
            dims_term,
            log_det_hessian,
            total,
            regular: !reduced,
            reduced_from: reduced.then(|| g.clone()),
        },
        solution,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedModel {
    pub graph: GraphStructure,
    pub probability: f64,
    pub score: ModelScore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    /// Distinct regular models, most probable first.
    pub models: Vec<RankedModel>,
    /// Inclusion probability of every vertex pair, in lexicographic order.
    pub edge_inclusion: BTreeMap<Edge, f64>,
    /// Edges with inclusion probability above one half.
    pub median_model: GraphStructure,
    /// Distinct graphs scored while producing the summary.
    pub visited_count: usize,
}

/// Renormalizes scores over the distinct graphs they describe.
///
/// Entries for the same graph (for instance a model and a reduction onto it)
/// are merged by keeping the first. Unsupported scores (`-∞`) are dropped.
pub fn normalize(scores: &[ModelScore]) -> Result<PosteriorSummary> {
    let mut distinct: BTreeMap<&GraphStructure, &ModelScore> = BTreeMap::new();
    for s in scores {
        if s.total == f64::NEG_INFINITY {
            continue;
        }
        distinct.entry(&s.graph).or_insert(s);
    }
    let Some(first) = distinct.keys().next() else {
        return Err(Error::EmptyModelSet);
    };
    let p = first.p();

    let top = distinct.values().map(|s| s.total).fold(f64::NEG_INFINITY, f64::max);
    let mass = distinct.values().map(|s| libm::exp(s.total - top)).sum::<f64>();

    let mut models: Vec<RankedModel> = distinct
        .values()
        .map(|s| RankedModel {
            graph: s.graph.clone(),
            probability: libm::exp(s.total - top) / mass,
            score: (*s).clone(),
        })
        .collect();
    models.sort_by(|a, b| {
        b.score
            .total
            .total_cmp(&a.score.total)
            .then_with(|| a.graph.cmp(&b.graph))
    });

    let mut inclusion = alloc::vec![0.0; pair_count(p)];
    for m in &models {
        for e in m.graph.edges() {
            inclusion[e.pair_index(p)] += m.probability;
        }
    }
    let mut edge_inclusion = BTreeMap::new();
    let mut median_model = GraphStructure::empty(p);
    for (k, &v) in inclusion.iter().enumerate() {
        let e = Edge::from_pair_index(k, p);
        let v = v.min(1.0);
        edge_inclusion.insert(e, v);
        if v > 0.5 {
            median_model.insert(e);
        }
    }

    Ok(PosteriorSummary {
        visited_count: models.len(),
        models,
        edge_inclusion,
        median_model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::Truncation;
    use alloc::vec;

    fn prior(lambda: f64, r_bar: usize) -> GraphPrior {
        GraphPrior::new(0.4, lambda, Truncation::HardCap { r_bar }).unwrap()
    }

    fn fake_score(p: usize, edges: &[(usize, usize)], total: f64) -> ModelScore {
        ModelScore {
            graph: GraphStructure::from_edges(p, edges.iter().copied()).unwrap(),
            log_prior: 0.0,
            log_fit: 0.0,
            dims_term: 0.0,
            log_det_hessian: 0.0,
            total,
            regular: true,
            reduced_from: None,
        }
    }

    #[test]
    fn h_value_examples() {
        let g = GraphStructure::empty(1);
        let v = h_value(&SymMatrix::identity(1), &SymMatrix::identity(1), 1.0, 2, &g).unwrap();
        assert!((v - 1.5).abs() < 1e-15);
        let g = GraphStructure::empty(4);
        let v = h_value(&SymMatrix::identity(4), &SymMatrix::identity(4), 0.0, 10, &g).unwrap();
        assert!((v - 4.0).abs() < 1e-15);
        assert!(h_value(&SymMatrix::zeros(2), &SymMatrix::identity(2), 1.0, 2, &GraphStructure::empty(2)).is_err());
    }

    #[test]
    fn h_value_matches_termwise_recomputation() {
        // second implementation: eigenvalues for log det, explicit double loops elsewhere
        let omega = SymMatrix::from_rows(&[&[1.7, -0.4], &[-0.4, 0.9]]).unwrap();
        let s = SymMatrix::from_rows(&[&[1.1, 0.35], &[0.35, 0.8]]).unwrap();
        let g = GraphStructure::complete(2);
        let (lambda, n) = (30.0, 60);
        let log_det: f64 = omega.eigenvalues().iter().map(|d| libm::log(*d)).sum();
        let mut tr = 0.0;
        for i in 0..2 {
            for k in 0..2 {
                tr += s.get(i, k) * omega.get(k, i);
            }
        }
        let expect = -log_det + tr + 2.0 * lambda / n as f64 * 0.4 + lambda / n as f64 * (1.7 + 0.9);
        let got = h_value(&omega, &s, lambda, n, &g).unwrap();
        assert!((got - expect).abs() < 1e-13);
    }

    #[test]
    fn identity_hessian_pattern() {
        let idx = GraphStructure::complete(3).free_index();
        let h = hessian_at(&SymMatrix::identity(3), &idx).unwrap();
        let d = idx.len();
        for a in 0..d {
            for b in 0..d {
                let (i, j) = idx.entries()[a];
                let expect = if a != b {
                    0.0
                } else if i == j {
                    1.0
                } else {
                    2.0
                };
                assert_eq!(h.entries.get(a, b), expect);
            }
        }
        let idx = GraphStructure::empty(2).free_index();
        let h = hessian_at(&SymMatrix::from_diag(&[2.0, 2.0]), &idx).unwrap();
        assert!((h.entries.get(0, 0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn hessian_matches_trace_definition() {
        let omega = SymMatrix::from_rows(&[
            &[2.0, 0.3, -0.2],
            &[0.3, 1.5, 0.4],
            &[-0.2, 0.4, 1.2],
        ])
        .unwrap();
        let idx = GraphStructure::complete(3).free_index();
        let h = hessian_at(&omega, &idx).unwrap();
        let w = omega.cholesky().unwrap().inverse();
        let basis = crate::graph::embedding_basis(&idx);
        for a in 0..idx.len() {
            for b in 0..idx.len() {
                let left = w.matmul(&basis[a]);
                let right = w.matmul(&basis[b]);
                let mut tr = 0.0;
                for r in 0..3 {
                    for k in 0..3 {
                        tr += left[r * 3 + k] * right[k * 3 + r];
                    }
                }
                assert!((h.entries.get(a, b) - tr).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn scalar_model_closed_form() {
        let (s, n, lambda) = (1.3, 40, 12.0);
        let sigma = SymMatrix::from_diag(&[s]);
        let pr = prior(lambda, 0);
        let score = score_model(&GraphStructure::empty(1), &sigma, n, &pr, &SolverConfig::default()).unwrap();
        let w = 1.0 / (s + lambda / n as f64);
        let nf = n as f64;
        let expect = libm::log(lambda / 2.0)
            - 0.5 * nf * (-libm::log(w) + s * w + lambda / nf * w)
            + 0.5 * libm::log(4.0 * core::f64::consts::PI / nf)
            - 0.5 * libm::log(1.0 / (w * w));
        assert!((score.total - expect).abs() < 1e-9, "{} vs {expect}", score.total);
        assert!(score.regular);
    }

    #[test]
    fn weak_edge_reduces_to_empty_graph() {
        let s = SymMatrix::from_rows(&[&[1.0, 0.2], &[0.2, 1.0]]).unwrap();
        let (n, lambda) = (100, 50.0);
        let pr = prior(lambda, 1);
        let cfg = SolverConfig::default();
        let full = score_model(&GraphStructure::complete(2), &s, n, &pr, &cfg).unwrap();
        let empty = score_model(&GraphStructure::empty(2), &s, n, &pr, &cfg).unwrap();
        assert!(!full.regular);
        assert_eq!(full.reduced_from, Some(GraphStructure::complete(2)));
        assert_eq!(full.graph, GraphStructure::empty(2));
        assert!(empty.regular);
        assert!((full.total - empty.total).abs() < 1e-9);
    }

    #[test]
    fn score_invariant_holds() {
        let s = SymMatrix::from_rows(&[&[1.0, 0.7, 0.49], &[0.7, 1.0, 0.7], &[0.49, 0.7, 1.0]]).unwrap();
        let pr = prior(100.0, 3);
        let g = GraphStructure::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let m = score_model(&g, &s, 200, &pr, &SolverConfig::default()).unwrap();
        assert!(m.regular);
        let sum = m.log_prior + m.log_fit + m.dims_term - 0.5 * m.log_det_hessian;
        assert_eq!(m.total, sum);
    }

    #[test]
    fn normalize_examples() {
        let one = normalize(&[fake_score(3, &[(0, 1)], -4.0)]).unwrap();
        assert_eq!(one.models[0].probability, 1.0);
        assert_eq!(one.median_model, GraphStructure::from_edges(3, [(0, 1)]).unwrap());

        let two = normalize(&[
            fake_score(3, &[(0, 1)], 2.0),
            fake_score(3, &[(0, 1), (1, 2)], 2.0),
        ])
        .unwrap();
        assert!((two.models[0].probability - 0.5).abs() < 1e-15);
        assert!((two.models[1].probability - 0.5).abs() < 1e-15);
        assert_eq!(two.edge_inclusion[&Edge::new(0, 1).unwrap()], 1.0);
        assert!((two.edge_inclusion[&Edge::new(1, 2).unwrap()] - 0.5).abs() < 1e-15);
        // exactly one half is not above one half
        assert_eq!(two.median_model, GraphStructure::from_edges(3, [(0, 1)]).unwrap());

        assert_eq!(normalize(&[]), Err(Error::EmptyModelSet));
    }

    #[test]
    fn normalize_is_shift_invariant_and_merges_duplicates() {
        let base = vec![
            fake_score(3, &[], -1.0),
            fake_score(3, &[(0, 2)], 0.5),
            fake_score(3, &[(0, 1), (0, 2)], -0.3),
            fake_score(3, &[(0, 2)], 0.5),
        ];
        let shifted: Vec<_> = base
            .iter()
            .map(|s| ModelScore {
                total: s.total + 1234.5,
                ..s.clone()
            })
            .collect();
        let a = normalize(&base).unwrap();
        let b = normalize(&shifted).unwrap();
        assert_eq!(a.models.len(), 3);
        for (x, y) in a.models.iter().zip(&b.models) {
            assert!((x.probability - y.probability).abs() < 1e-12);
        }
        let sum: f64 = a.models.iter().map(|m| m.probability).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}
