//! Run configuration: TOML file values overridden by command-line flags.

use std::path::Path;

use ggmsel_core::graph::pair_count;
use ggmsel_core::prior::{default_rbar, GraphPrior, Truncation, DEFAULT_Q, DEFAULT_RHO};
use ggmsel_core::search::{SearchConfig, SearchMode};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SearchKind {
    Exact,
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruncationConfig {
    HardCap {
        #[serde(default)]
        r_bar: Option<usize>,
    },
    Hierarchical {
        a1: f64,
        a2: f64,
    },
}

/// Keys accepted in a `--config` TOML file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub rho: Option<f64>,
    pub q: Option<f64>,
    pub truncation: Option<TruncationConfig>,
    pub search: Option<SearchKind>,
    pub steps: Option<usize>,
    pub restarts: Option<usize>,
    pub temperature: Option<f64>,
    pub max_edges: Option<usize>,
    pub seed: Option<u64>,
    pub standardize: Option<bool>,
    pub log_returns: Option<bool>,
    pub header: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config file: {e}")))
    }
}

/// Model and search settings before the data dimensions are known.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSettings {
    pub rho: f64,
    pub q: f64,
    pub truncation: TruncationConfig,
    pub search: Option<SearchKind>,
    pub steps: Option<usize>,
    pub restarts: Option<usize>,
    pub temperature: f64,
    pub max_edges: Option<usize>,
    pub seed: u64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            rho: DEFAULT_RHO,
            q: DEFAULT_Q,
            truncation: TruncationConfig::HardCap { r_bar: None },
            search: None,
            steps: None,
            restarts: None,
            temperature: 1.0,
            max_edges: None,
            seed: 0,
        }
    }
}

impl ModelSettings {
    pub fn apply_file(&mut self, f: &FileConfig) {
        if let Some(v) = f.rho {
            self.rho = v;
        }
        if let Some(v) = f.q {
            self.q = v;
        }
        if let Some(v) = f.truncation {
            self.truncation = v;
        }
        self.search = f.search.or(self.search);
        self.steps = f.steps.or(self.steps);
        self.restarts = f.restarts.or(self.restarts);
        if let Some(v) = f.temperature {
            self.temperature = v;
        }
        self.max_edges = f.max_edges.or(self.max_edges);
        if let Some(v) = f.seed {
            self.seed = v;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(CliError::Config(format!("rho must be positive, got {}", self.rho)));
        }
        Ok(())
    }

    /// The concrete prior, search configuration and edge cap for data of shape `n × p`.
    pub fn resolve(&self, n: usize, p: usize) -> Result<Resolved, CliError> {
        self.validate()?;
        let truncation = match self.truncation {
            TruncationConfig::HardCap { r_bar } => Truncation::HardCap {
                r_bar: r_bar.unwrap_or_else(|| default_rbar(n, p, p)),
            },
            TruncationConfig::Hierarchical { a1, a2 } => Truncation::Hierarchical { a1, a2 },
        };
        let prior = GraphPrior::with_penalty(n, self.rho, self.q, truncation)?;
        let mut search = SearchConfig::for_dimension(p, self.seed);
        if let Some(kind) = self.search {
            search.mode = match kind {
                SearchKind::Exact => SearchMode::Enumerate,
                SearchKind::Stochastic => SearchMode::Stochastic,
            };
        }
        if let Some(s) = self.steps {
            search.steps = s;
        }
        if let Some(r) = self.restarts {
            search.restarts = r;
        }
        search.temperature = self.temperature;
        search.max_edges = self.max_edges.unwrap_or(pair_count(p));
        search.validate()?;
        Ok(Resolved { prior, search })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub prior: GraphPrior,
    pub search: SearchConfig,
}

/// Echo of the effective configuration, embedded in every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub rho: f64,
    pub lambda: f64,
    pub q: f64,
    pub truncation: TruncationEcho,
    pub search: &'static str,
    pub steps: usize,
    pub restarts: usize,
    pub temperature: f64,
    pub max_edges: usize,
    pub seed: u64,
    pub solver_tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TruncationEcho {
    HardCap { r_bar: usize },
    Hierarchical { a1: f64, a2: f64 },
}

impl ConfigEcho {
    pub fn new(settings: &ModelSettings, resolved: &Resolved) -> Self {
        let s = &resolved.search;
        ConfigEcho {
            rho: settings.rho,
            lambda: resolved.prior.lambda,
            q: resolved.prior.q,
            truncation: match resolved.prior.truncation {
                Truncation::HardCap { r_bar } => TruncationEcho::HardCap { r_bar },
                Truncation::Hierarchical { a1, a2 } => TruncationEcho::Hierarchical { a1, a2 },
            },
            search: match s.mode {
                SearchMode::Enumerate => "exact",
                SearchMode::Stochastic => "stochastic",
            },
            steps: s.steps,
            restarts: s.restarts,
            temperature: s.temperature,
            max_edges: s.max_edges,
            seed: s.seed,
            solver_tolerance: s.solver.tol,
        }
    }
}
