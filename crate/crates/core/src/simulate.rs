//! Synthetic benchmarks: ground-truth precision matrices, Gaussian sampling and
//! edge-recovery metrics.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::glasso::{self, GlassoProblem};
use crate::graph::{pair_count, Edge, GraphStructure};
use crate::matrix::SymMatrix;
use crate::prior::GraphPrior;
use crate::search::{search, SearchConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `σ_ij = 0.7^{|i-j|}`.
    Ar1,
    /// Unit diagonal, 0.5 on the first off-diagonal band, 0.25 on the second.
    Ar2,
    /// Unit diagonal, 0.1 between vertex 1 and every other vertex.
    Star,
    /// Diagonal 2, neighbours 1, and 0.9 closing the cycle.
    Circle,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Ar1, Family::Ar2, Family::Star, Family::Circle];

    pub fn name(self) -> &'static str {
        match self {
            Family::Ar1 => "ar1",
            Family::Ar2 => "ar2",
            Family::Star => "star",
            Family::Circle => "circle",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s) || (s.eq_ignore_ascii_case("ar(1)") && *f == Family::Ar1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruthSpec {
    pub family: Family,
    pub p: usize,
}

impl TruthSpec {
    pub fn new(family: Family, p: usize) -> Result<Self> {
        let min = match family {
            Family::Ar1 | Family::Star => 2,
            Family::Ar2 | Family::Circle => 3,
        };
        if p < min {
            return Err(Error::InvalidConfig("too few vertices for this family"));
        }
        Ok(Self { family, p })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthMatrices {
    /// Present for families defined through their covariance.
    pub sigma: Option<SymMatrix>,
    pub omega: SymMatrix,
    pub graph: GraphStructure,
}

pub fn truth_matrices(spec: TruthSpec) -> Result<TruthMatrices> {
    let p = spec.p;
    let (sigma, omega) = match spec.family {
        Family::Ar1 => {
            let sigma = SymMatrix::from_fn(p, |i, j| libm::pow(0.7, (j - i) as f64));
            let mut omega = sigma.cholesky()?.inverse();
            // the exact inverse is tridiagonal
            for i in 0..p {
                for j in (i + 2)..p {
                    omega.set(i, j, 0.0);
                }
            }
            (Some(sigma), omega)
        }
        Family::Ar2 => (
            None,
            SymMatrix::from_fn(p, |i, j| match j - i {
                0 => 1.0,
                1 => 0.5,
                2 => 0.25,
                _ => 0.0,
            }),
        ),
        Family::Star => (
            None,
            SymMatrix::from_fn(p, |i, j| {
                if i == j {
                    1.0
                } else if i == 0 {
                    0.1
                } else {
                    0.0
                }
            }),
        ),
        Family::Circle => (
            None,
            SymMatrix::from_fn(p, |i, j| {
                if i == j {
                    2.0
                } else if j == i + 1 {
                    1.0
                } else if i == 0 && j == p - 1 {
                    0.9
                } else {
                    0.0
                }
            }),
        ),
    };
    assert!(omega.is_positive_definite(), "truth precision is not positive definite");
    let graph = glasso::support_of(&omega, 0.0);
    Ok(TruthMatrices { sigma, omega, graph })
}

/// An `n × p` data matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * p {
            return Err(Error::DimensionMismatch {
                expected: n * p,
                got: values.len(),
            });
        }
        Ok(Self { n, p, values })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.p
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.p..(r + 1) * self.p]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.p + c]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `XᵀX / n`, the maximum-likelihood covariance for mean-zero data.
    pub fn covariance(&self) -> SymMatrix {
        let p = self.p;
        let mut acc = vec![0.0; p * p];
        for r in 0..self.n {
            let x = self.row(r);
            for i in 0..p {
                for j in i..p {
                    acc[i * p + j] += x[i] * x[j];
                }
            }
        }
        let n = self.n as f64;
        SymMatrix::from_fn(p, |i, j| acc[i * p + j] / n)
    }
}

/// `n` i.i.d. draws from `N(0, Ω⁻¹)`.
pub fn sample(omega: &SymMatrix, n: usize, seed: u64) -> Result<DataMatrix> {
    let p = omega.dim();
    let sigma = omega.cholesky()?.inverse();
    let l = sigma.cholesky()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n * p);
    let mut z = vec![0.0; p];
    for _ in 0..n {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        for i in 0..p {
            let x: f64 = (0..=i).map(|k| l.lower(i, k) * z[k]).sum();
            values.push(x);
        }
    }
    DataMatrix::new(n, p, values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryMetrics {
    pub sp: f64,
    pub se: f64,
    pub mcc: f64,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Confusion counts over all vertex pairs. Undefined ratios are reported as 0.
pub fn metrics(estimated: &GraphStructure, truth: &GraphStructure) -> Result<RecoveryMetrics> {
    let p = truth.p();
    if estimated.p() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: estimated.p(),
        });
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for k in 0..pair_count(p) {
        let e = Edge::from_pair_index(k, p);
        match (estimated.contains(e), truth.contains(e)) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
        }
    }
    let ratio = |a: usize, b: usize| if a + b == 0 { 0.0 } else { a as f64 / (a + b) as f64 };
    let (tpf, tnf, fpf, fnf) = (tp as f64, tn as f64, fp as f64, fn_ as f64);
    let denom = (tpf + fpf) * (tpf + fnf) * (tnf + fpf) * (tnf + fnf);
    let mcc = if denom == 0.0 {
        0.0
    } else {
        (tpf * tnf - fpf * fnf) / libm::sqrt(denom)
    };
    Ok(RecoveryMetrics {
        sp: ratio(tn, fp),
        se: ratio(tp, fn_),
        mcc,
        tp,
        tn,
        fp,
        fn_,
    })
}

/// Metrics of one simulated replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationOutcome {
    /// Median probability model.
    pub mpp: RecoveryMetrics,
    /// Support of the unconstrained graphical lasso at the same penalty.
    pub gl: RecoveryMetrics,
}

/// Sample, search and score one replication. Data use seed `seed + rep`, as does the search.
pub fn run_replication(
    truth: &TruthMatrices,
    n: usize,
    prior: &GraphPrior,
    search_cfg: &SearchConfig,
    seed: u64,
    rep: usize,
) -> Result<ReplicationOutcome> {
    let rep_seed = seed.wrapping_add(rep as u64);
    let data = sample(&truth.omega, n, rep_seed)?;
    let cov = data.covariance();
    let mut cfg = search_cfg.clone();
    cfg.seed = rep_seed;
    let summary = search(&cov, n, prior, &cfg)?;
    let gl = glasso::solve(&GlassoProblem::new(&cov, prior.rho(n)), &cfg.solver)?;
    let gl_graph = glasso::support_of(&gl.omega_star, glasso::zero_threshold(&gl.omega_star));
    Ok(ReplicationOutcome {
        mpp: metrics(&summary.median_model, &truth.graph)?,
        gl: metrics(&gl_graph, &truth.graph)?,
    })
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> MeanSe {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        if values.len() < 2 {
            return MeanSe { mean, se: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
        MeanSe {
            mean,
            se: libm::sqrt(var / k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub sp: MeanSe,
    pub se: MeanSe,
    pub mcc: MeanSe,
}

impl MetricSummary {
    pub fn of(m: &[RecoveryMetrics]) -> MetricSummary {
        let col = |f: fn(&RecoveryMetrics) -> f64| MeanSe::of(&m.iter().map(f).collect::<Vec<_>>());
        MetricSummary {
            sp: col(|r| r.sp),
            se: col(|r| r.se),
            mcc: col(|r| r.mcc),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyReport {
    pub spec: TruthSpec,
    pub n: usize,
    pub reps: usize,
    pub mpp: MetricSummary,
    pub gl: MetricSummary,
}

pub fn summarize_study(spec: TruthSpec, n: usize, outcomes: &[ReplicationOutcome]) -> Result<StudyReport> {
    if outcomes.is_empty() {
        return Err(Error::InvalidConfig("reps must be at least 1"));
    }
    let mpp: Vec<RecoveryMetrics> = outcomes.iter().map(|o| o.mpp).collect();
    let gl: Vec<RecoveryMetrics> = outcomes.iter().map(|o| o.gl).collect();
    Ok(StudyReport {
        spec,
        n,
        reps: outcomes.len(),
        mpp: MetricSummary::of(&mpp),
        gl: MetricSummary::of(&gl),
    })
}

pub fn run_study(
    spec: TruthSpec,
    n: usize,
    reps: usize,
    prior: &GraphPrior,
    search_cfg: &SearchConfig,
    seed: u64,
) -> Result<StudyReport> {
    let truth = truth_matrices(spec)?;
    let outcomes = (0..reps)
        .map(|rep| run_replication(&truth, n, prior, search_cfg, seed, rep))
        .collect::<Result<Vec<_>>>()?;
    summarize_study(spec, n, &outcomes)
}
