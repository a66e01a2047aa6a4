//! Exploration of graph space.
//!
//! Small problems are enumerated. Larger ones are explored by a Metropolis walk
//! over regular graphs that toggles one edge at a time; model probabilities are
//! then recomputed from the scores of every distinct model the walk touched,
//! not from visit frequencies.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::glasso::{self, GlassoProblem, SolverConfig};
use crate::graph::{enumerate_all, pair_count, Edge, GraphStructure};
use crate::matrix::SymMatrix;
use crate::prior::GraphPrior;
use crate::score::{normalize, score_model_from, ModelScore, PosteriorSummary};

/// Problems with at most this many vertex pairs are enumerated by default.
pub const DEFAULT_ENUMERATION_PAIRS: usize = 20;
pub const STEPS_PER_PAIR: usize = 200;
pub const DEFAULT_RESTARTS: usize = 3;
pub const PROGRESS_INTERVAL: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Enumerate,
    Stochastic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub mode: SearchMode,
    /// Largest edge count considered; also bounded by the prior's truncation.
    pub max_edges: usize,
    /// Proposals per restart.
    pub steps: usize,
    pub restarts: usize,
    pub seed: u64,
    pub temperature: f64,
    pub solver: SolverConfig,
}

impl SearchConfig {
    /// Enumeration when `C(p,2) ≤ 20`, otherwise `200·C(p,2)` steps and 3 restarts.
    pub fn for_dimension(p: usize, seed: u64) -> Self {
        let pairs = pair_count(p);
        Self {
            mode: if pairs <= DEFAULT_ENUMERATION_PAIRS {
                SearchMode::Enumerate
            } else {
                SearchMode::Stochastic
            },
            max_edges: pairs,
            steps: (STEPS_PER_PAIR * pairs).max(1),
            restarts: DEFAULT_RESTARTS,
            seed,
            temperature: 1.0,
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1"));
        }
        if self.mode == SearchMode::Stochastic && self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1"));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidConfig("temperature must be positive"));
        }
        Ok(())
    }

    fn edge_cap(&self, p: usize, prior: &GraphPrior) -> usize {
        self.max_edges.min(prior.max_edges(p))
    }
}

/// Scores every graph with at most `max_edges` edges.
pub fn search_exact(
    data_cov: &SymMatrix,
    n: usize,
    prior: &GraphPrior,
    cfg: &SearchConfig,
) -> Result<PosteriorSummary> {
    let p = data_cov.dim();
    let graphs = enumerate_all(p, cfg.edge_cap(p, prior))?;
    let mut scores = Vec::new();
    for g in graphs {
        let s = score_model_from(&g, data_cov, n, prior, &cfg.solver, None)?;
        scores.push(s.score);
    }
    normalize(&scores)
}

/// Dispatches on `cfg.mode`.
pub fn search(
    data_cov: &SymMatrix,
    n: usize,
    prior: &GraphPrior,
    cfg: &SearchConfig,
) -> Result<PosteriorSummary> {
    match cfg.mode {
        SearchMode::Enumerate => search_exact(data_cov, n, prior, cfg),
        SearchMode::Stochastic => search_stochastic(data_cov, n, prior, cfg),
    }
}

/// Progress report passed to the callback every [`PROGRESS_INTERVAL`] steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub restart: usize,
    pub step: usize,
    pub steps: usize,
    pub current_total: f64,
    pub distinct_models: usize,
}

/// Output of a single restart.
#[derive(Debug, Clone)]
pub struct ChainResult {
    /// Scores of every distinct regular model touched, in first-visit order.
    pub scores: Vec<ModelScore>,
    /// Proposals that stayed within the edge cap.
    pub eligible: usize,
    pub accepted: usize,
    /// Proposals that needed a glasso solve.
    pub solves: usize,
}

impl ChainResult {
    pub fn acceptance_rate(&self) -> f64 {
        if self.eligible == 0 {
            0.0
        } else {
            self.accepted as f64 / self.eligible as f64
        }
    }
}

struct State {
    graph: GraphStructure,
    total: f64,
    omega: SymMatrix,
    w: SymMatrix,
}

struct Chain<'a> {
    cov: &'a SymMatrix,
    n: usize,
    prior: &'a GraphPrior,
    cfg: &'a SearchConfig,
    rho: f64,
    cap: usize,
    /// Requested graph → position of its (regular) score in `scores`.
    requested: BTreeMap<GraphStructure, usize>,
    regular: BTreeMap<GraphStructure, usize>,
    scores: Vec<ModelScore>,
    solves: usize,
}

impl<'a> Chain<'a> {
    fn record(&mut self, requested: &GraphStructure, score: ModelScore) -> usize {
        let pos = match self.regular.get(&score.graph) {
            Some(&k) => k,
            None => {
                self.scores.push(score.clone());
                self.regular.insert(score.graph.clone(), self.scores.len() - 1);
                self.scores.len() - 1
            }
        };
        self.requested.insert(requested.clone(), pos);
        self.requested.entry(score.graph).or_insert(pos);
        pos
    }

    fn evaluate(&mut self, g: &GraphStructure, warm: Option<&SymMatrix>) -> Result<State> {
        self.solves += 1;
        let scored = score_model_from(g, self.cov, self.n, self.prior, &self.cfg.solver, warm)?;
        let state = State {
            graph: scored.score.graph.clone(),
            total: scored.score.total,
            omega: scored.solution.omega_star,
            w: scored.solution.omega_inverse,
        };
        self.record(g, scored.score);
        Ok(state)
    }

    fn start(&mut self, restart: usize, rng: &mut ChaCha8Rng) -> Result<State> {
        let p = self.cov.dim();
        let g = match restart {
            0 => {
                let full = glasso::solve(&GlassoProblem::new(self.cov, self.rho), &self.cfg.solver)?;
                let support = glasso::support_of(&full.omega_star, glasso::zero_threshold(&full.omega_star));
                if support.edge_count() <= self.cap {
                    support
                } else {
                    GraphStructure::empty(p)
                }
            }
            1 => GraphStructure::empty(p),
            _ => {
                let mut g = GraphStructure::empty(p);
                for k in 0..pair_count(p) {
                    if g.edge_count() < self.cap && rng.random::<f64>() < self.prior.q {
                        g.insert(Edge::from_pair_index(k, p));
                    }
                }
                g
            }
        };
        self.evaluate(&g, None)
    }

    /// Adding `e` to a graph whose solution already satisfies the zero-entry
    /// optimality condition at `e` leaves the solution unchanged, so the
    /// proposal reduces to the current graph.
    fn addition_is_inert(&self, state: &State, e: Edge) -> bool {
        let gap = (state.w.get(e.i(), e.j()) - self.cov.get(e.i(), e.j())).abs() - self.rho;
        gap <= self.cfg.solver.tol
    }

    fn propose(&mut self, state: &State, e: Edge) -> Result<Proposal> {
        let target = state.graph.toggled(e);
        if let Some(&k) = self.requested.get(&target) {
            if self.scores[k].graph == state.graph {
                return Ok(Proposal::Stay);
            }
            return Ok(Proposal::Known(k));
        }
        if !state.graph.contains(e) && self.addition_is_inert(state, e) {
            let k = self.regular[&state.graph];
            self.requested.insert(target, k);
            return Ok(Proposal::Stay);
        }
        let warm = warm_start(&state.omega, &target);
        let next = self.evaluate(&target, warm.as_ref())?;
        if next.graph == state.graph {
            return Ok(Proposal::Stay);
        }
        Ok(Proposal::Fresh(next))
    }

    /// Solves a previously scored regular model again to recover its solution.
    fn materialize(&mut self, state: &State, k: usize) -> Result<State> {
        let target = self.scores[k].graph.clone();
        let warm = warm_start(&state.omega, &target);
        self.solves += 1;
        let scored = score_model_from(&target, self.cov, self.n, self.prior, &self.cfg.solver, warm.as_ref())?;
        Ok(State {
            graph: scored.score.graph,
            total: scored.score.total,
            omega: scored.solution.omega_star,
            w: scored.solution.omega_inverse,
        })
    }
}

enum Proposal {
    /// The proposal reduces to the current model.
    Stay,
    /// A model already scored, at this position.
    Known(usize),
    Fresh(State),
}

/// `omega` with entries outside `target` zeroed, if that stays positive definite.
fn warm_start(omega: &SymMatrix, target: &GraphStructure) -> Option<SymMatrix> {
    let p = omega.dim();
    let mut warm = omega.clone();
    for i in 0..p {
        for j in (i + 1)..p {
            if !target.has_edge(i, j) {
                warm.set(i, j, 0.0);
            }
        }
    }
    warm.is_positive_definite().then_some(warm)
}

/// One restart of the edge-toggle walk.
pub fn run_chain(
    data_cov: &SymMatrix,
    n: usize,
    prior: &GraphPrior,
    cfg: &SearchConfig,
    restart: usize,
    progress: &mut dyn FnMut(Progress),
) -> Result<ChainResult> {
    cfg.validate()?;
    let p = data_cov.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);
    let mut chain = Chain {
        cov: data_cov,
        n,
        prior,
        cfg,
        rho: prior.rho(n),
        cap: cfg.edge_cap(p, prior),
        requested: BTreeMap::new(),
        regular: BTreeMap::new(),
        scores: Vec::new(),
        solves: 0,
    };
    let mut state = chain.start(restart, &mut rng)?;
    let pairs = pair_count(p);
    let (mut eligible, mut accepted) = (0, 0);
    for step in 0..cfg.steps {
        if pairs > 0 {
            let e = Edge::from_pair_index(rng.random_range(0..pairs), p);
            let u: f64 = rng.random();
            if state.graph.contains(e) || state.graph.edge_count() < chain.cap {
                eligible += 1;
                match chain.propose(&state, e)? {
                    Proposal::Stay => accepted += 1,
                    Proposal::Known(k) => {
                        if libm::log(u) < (chain.scores[k].total - state.total) / cfg.temperature {
                            accepted += 1;
                            state = chain.materialize(&state, k)?;
                        }
                    }
                    Proposal::Fresh(next) => {
                        if libm::log(u) < (next.total - state.total) / cfg.temperature {
                            accepted += 1;
                            state = next;
                        }
                    }
                }
            }
        }
        if (step + 1) % PROGRESS_INTERVAL == 0 {
            progress(Progress {
                restart,
                step: step + 1,
                steps: cfg.steps,
                current_total: state.total,
                distinct_models: chain.scores.len(),
            });
        }
    }
    Ok(ChainResult {
        scores: chain.scores,
        eligible,
        accepted,
        solves: chain.solves,
    })
}

/// Merges restarts in restart order and renormalizes over the distinct models.
pub fn merge_chains(chains: &[ChainResult]) -> Result<PosteriorSummary> {
    let all: Vec<ModelScore> = chains.iter().flat_map(|c| c.scores.iter().cloned()).collect();
    normalize(&all)
}

pub fn search_stochastic(
    data_cov: &SymMatrix,
    n: usize,
    prior: &GraphPrior,
    cfg: &SearchConfig,
) -> Result<PosteriorSummary> {
    search_stochastic_with_progress(data_cov, n, prior, cfg, &mut |_| {})
}

pub fn search_stochastic_with_progress(
    data_cov: &SymMatrix,
    n: usize,
    prior: &GraphPrior,
    cfg: &SearchConfig,
    progress: &mut dyn FnMut(Progress),
) -> Result<PosteriorSummary> {
    cfg.validate()?;
    let chains = (0..cfg.restarts)
        .map(|r| run_chain(data_cov, n, prior, cfg, r, progress))
        .collect::<Result<Vec<_>>>()?;
    merge_chains(&chains)
}
