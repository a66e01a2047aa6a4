//! Thread-pool drivers. Work is split into independent units whose results are
//! combined in a fixed order, so outputs do not depend on the thread count.

use ggmsel_core::graph::GraphStructure;
use ggmsel_core::oracle::{merge_batches, ImportancePlan, IntegralEstimate, WeightStats};
use ggmsel_core::prior::GraphPrior;
use ggmsel_core::score::PosteriorSummary;
use ggmsel_core::search::{merge_chains, run_chain, search_exact, Progress, SearchConfig, SearchMode};
use ggmsel_core::simulate::{run_replication, summarize_study, truth_matrices, StudyReport, TruthSpec};
use ggmsel_core::{Result, SymMatrix};
use rayon::prelude::*;

use crate::error::CliError;

/// `threads = 0` lets rayon pick.
pub fn pool(threads: usize) -> std::result::Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))
}

/// Runs restarts concurrently and merges them in restart order.
pub fn search<F>(
    pool: &rayon::ThreadPool,
    cov: &SymMatrix,
    n: usize,
    prior: &GraphPrior,
    cfg: &SearchConfig,
    progress: F,
) -> Result<PosteriorSummary>
where
    F: Fn(Progress) + Sync,
{
    match cfg.mode {
        SearchMode::Enumerate => search_exact(cov, n, prior, cfg),
        SearchMode::Stochastic => {
            cfg.validate()?;
            let chains = pool.install(|| {
                (0..cfg.restarts)
                    .into_par_iter()
                    .map(|r| run_chain(cov, n, prior, cfg, r, &mut |p| progress(p)))
                    .collect::<Result<Vec<_>>>()
            })?;
            merge_chains(&chains)
        }
    }
}

/// Replications run concurrently and are summarized in replication order.
pub fn study(
    pool: &rayon::ThreadPool,
    spec: TruthSpec,
    n: usize,
    reps: usize,
    prior: &GraphPrior,
    cfg: &SearchConfig,
    seed: u64,
) -> Result<StudyReport> {
    let truth = truth_matrices(spec)?;
    let outcomes = pool.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|rep| run_replication(&truth, n, prior, cfg, seed, rep))
            .collect::<Result<Vec<_>>>()
    })?;
    summarize_study(spec, n, &outcomes)
}

/// Importance-sampling marginal with batches drawn concurrently.
pub fn mc_marginal(
    pool: &rayon::ThreadPool,
    g: &GraphStructure,
    sigma_hat: &SymMatrix,
    n: usize,
    lambda: f64,
    draws: usize,
    seed: u64,
) -> Result<IntegralEstimate> {
    let plan = ImportancePlan::new(g, sigma_hat, n, lambda, draws, seed)?;
    let stats: Vec<WeightStats> =
        pool.install(|| (0..plan.batch_count()).into_par_iter().map(|b| plan.run_batch(b)).collect());
    Ok(merge_batches(&stats).estimate())
}
