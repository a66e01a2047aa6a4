use ggmsel_core::glasso::{self, GlassoProblem, SolverConfig};
use ggmsel_core::graph::{enumerate_all, GraphStructure};
use ggmsel_core::prior::{GraphPrior, Truncation};
use ggmsel_core::score::{score_model, PosteriorSummary};
use ggmsel_core::search::{run_chain, search_exact, search_stochastic, SearchConfig, SearchMode};
use ggmsel_core::simulate::{sample, truth_matrices, Family, TruthSpec};
use ggmsel_core::SymMatrix;
use std::collections::BTreeMap;

fn ar1_cov(p: usize, n: usize, seed: u64) -> SymMatrix {
    let t = truth_matrices(TruthSpec::new(Family::Ar1, p).unwrap()).unwrap();
    sample(&t.omega, n, seed).unwrap().covariance()
}

fn total_variation(a: &PosteriorSummary, b: &PosteriorSummary) -> f64 {
    let mut probs: BTreeMap<&GraphStructure, (f64, f64)> = BTreeMap::new();
    for m in &a.models {
        probs.entry(&m.graph).or_default().0 = m.probability;
    }
    for m in &b.models {
        probs.entry(&m.graph).or_default().1 = m.probability;
    }
    0.5 * probs.values().map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[test]
fn stochastic_search_is_reproducible() {
    let cov = ar1_cov(7, 100, 1);
    let prior = GraphPrior::with_penalty(100, 0.5, 0.4, Truncation::HardCap { r_bar: 21 }).unwrap();
    let mut cfg = SearchConfig::for_dimension(7, 42);
    cfg.steps = 2000;
    let a = search_stochastic(&cov, 100, &prior, &cfg).unwrap();
    let b = search_stochastic(&cov, 100, &prior, &cfg).unwrap();
    assert_eq!(a, b);
    cfg.seed = 43;
    let c = search_stochastic(&cov, 100, &prior, &cfg).unwrap();
    assert!(c.visited_count > 0);
}

#[test]
fn stochastic_matches_enumeration_at_four_vertices() {
    let n = 60;
    let cov = ar1_cov(4, n, 9);
    let prior = GraphPrior::with_penalty(n, 0.3, 0.4, Truncation::HardCap { r_bar: 6 }).unwrap();
    let mut cfg = SearchConfig::for_dimension(4, 5);
    let exact = search_exact(&cov, n, &prior, &cfg).unwrap();
    cfg.mode = SearchMode::Stochastic;
    cfg.steps = 20_000;
    let walk = search_stochastic(&cov, n, &prior, &cfg).unwrap();
    let tv = total_variation(&exact, &walk);
    assert!(tv <= 0.05, "tv {tv}");
}

#[test]
fn hot_chains_accept_almost_everything() {
    let cov = ar1_cov(6, 80, 2);
    let prior = GraphPrior::with_penalty(80, 0.5, 0.4, Truncation::HardCap { r_bar: 15 }).unwrap();
    let mut cfg = SearchConfig::for_dimension(6, 3);
    cfg.steps = 3000;
    let rate = |t: f64, cfg: &mut SearchConfig| {
        cfg.temperature = t;
        run_chain(&cov, 80, &prior, cfg, 1, &mut |_| {}).unwrap().acceptance_rate()
    };
    let cold = rate(1.0, &mut cfg);
    let hot = rate(1e9, &mut cfg);
    assert!(hot > 0.999, "hot {hot}");
    assert!(hot >= cold);
}

#[test]
fn walk_respects_the_edge_cap() {
    let cov = ar1_cov(8, 100, 4);
    let prior = GraphPrior::with_penalty(100, 0.05, 0.4, Truncation::HardCap { r_bar: 4 }).unwrap();
    let mut cfg = SearchConfig::for_dimension(8, 11);
    cfg.steps = 3000;
    cfg.temperature = 50.0;
    let out = search_stochastic(&cov, 100, &prior, &cfg).unwrap();
    assert!(out.models.iter().all(|m| m.graph.edge_count() <= 4));
    let mut progress = 0;
    run_chain(&cov, 100, &prior, &cfg, 0, &mut |_| progress += 1).unwrap();
    assert_eq!(progress, 3);
}

#[test]
fn probabilities_do_not_depend_on_visit_order() {
    let cov = ar1_cov(3, 200, 6);
    let prior = GraphPrior::with_penalty(200, 0.5, 0.4, Truncation::HardCap { r_bar: 3 }).unwrap();
    let cfg = SearchConfig::for_dimension(3, 0);
    let exact = search_exact(&cov, 200, &prior, &cfg).unwrap();
    let mut scores: Vec<_> = enumerate_all(3, 3)
        .unwrap()
        .map(|g| score_model(&g, &cov, 200, &prior, &cfg.solver).unwrap())
        .collect();
    scores.reverse();
    let reordered = ggmsel_core::score::normalize(&scores).unwrap();
    assert!(total_variation(&exact, &reordered) < 1e-9);
}

/// Builds a non-regular graph by adding to a regular model every edge whose
/// zero entry already satisfies the optimality condition.
fn non_regular_pairs(count: usize) -> Vec<(SymMatrix, f64, GraphStructure, GraphStructure)> {
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < count {
        seed += 1;
        let p = 3 + (seed as usize % 4);
        let cov = ar1_cov(p, 50, seed);
        let rho = 0.3;
        let full = glasso::solve(&GlassoProblem::new(&cov, rho), &SolverConfig::default()).unwrap();
        let reg = glasso::support_of(&full.omega_star, glasso::zero_threshold(&full.omega_star));
        if reg.edge_count() == ggmsel_core::graph::pair_count(p) {
            continue;
        }
        out.push((cov, rho, GraphStructure::complete(p), reg));
    }
    out
}

#[test]
fn non_regular_models_share_the_solution_of_their_reduction() {
    let cfg = SolverConfig {
        tol: 1e-9,
        max_iter: 2000,
    };
    for (cov, rho, big, small) in non_regular_pairs(30) {
        let a = glasso::solve(&GlassoProblem::new(&cov, rho).with_support(&big), &cfg).unwrap();
        let b = glasso::solve(&GlassoProblem::new(&cov, rho).with_support(&small), &cfg).unwrap();
        let zeros = glasso::zero_set(&a, &big, glasso::zero_threshold(&a.omega_star));
        assert!(!zeros.is_empty());
        assert_eq!(big.without(&zeros), small);
        assert!((&a.omega_star - &b.omega_star).max_abs() <= 1e-6);
    }
}

#[test]
fn reduced_scores_agree_with_direct_scores() {
    let n = 50;
    for (cov, rho, big, small) in non_regular_pairs(10) {
        let prior = GraphPrior::with_penalty(n, rho, 0.4, Truncation::HardCap { r_bar: 100 }).unwrap();
        let a = score_model(&big, &cov, n, &prior, &SolverConfig::default()).unwrap();
        let b = score_model(&small, &cov, n, &prior, &SolverConfig::default()).unwrap();
        assert!(!a.regular && b.regular);
        assert_eq!(a.graph, small);
        assert_eq!(a.reduced_from.as_ref(), Some(&big));
        assert!((a.total - b.total).abs() <= 1e-6);
    }
}
