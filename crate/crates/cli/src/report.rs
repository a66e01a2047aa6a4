//! Output artifacts: JSON summary, edge lists and the study CSV.

use std::io::{BufRead, Write};

use ggmsel_core::graph::GraphStructure;
use ggmsel_core::score::{ModelScore, PosteriorSummary};
use ggmsel_core::simulate::{MeanSe, StudyReport};
use serde::Serialize;

use crate::config::ConfigEcho;
use crate::error::CliError;

pub const DEFAULT_TOP_MODELS: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct DataShape {
    pub n: usize,
    pub p: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelEntry {
    /// 1-based `[i, j]` pairs.
    pub edges: Vec<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
    pub total: f64,
    pub log_prior: f64,
    pub log_fit: f64,
    pub dims_term: f64,
    pub log_det_hessian: f64,
    pub regular: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced_from: Option<Vec<[usize; 2]>>,
}

impl ModelEntry {
    fn new(score: &ModelScore, probability: Option<f64>) -> Self {
        ModelEntry {
            edges: edge_pairs(&score.graph),
            probability,
            total: score.total,
            log_prior: score.log_prior,
            log_fit: score.log_fit,
            dims_term: score.dims_term,
            log_det_hessian: score.log_det_hessian,
            regular: score.regular,
            reduced_from: score.reduced_from.as_ref().map(edge_pairs),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub config: ConfigEcho,
    pub data: DataShape,
    pub model_count: usize,
    pub top_models: Vec<ModelEntry>,
    /// Keys are `"i-j"`, 1-based, in pair order.
    #[serde(serialize_with = "as_map")]
    pub edge_inclusion: Vec<(String, f64)>,
    pub median_probability_model: Vec<[usize; 2]>,
}

impl FitReport {
    pub fn new(config: ConfigEcho, n: usize, p: usize, summary: &PosteriorSummary, top: usize) -> Self {
        let edge_inclusion = summary
            .edge_inclusion
            .iter()
            .map(|(e, &v)| (format!("{}-{}", e.i() + 1, e.j() + 1), v))
            .collect();
        FitReport {
            config,
            data: DataShape { n, p },
            model_count: summary.models.len(),
            top_models: summary
                .models
                .iter()
                .take(top)
                .map(|m| ModelEntry::new(&m.score, Some(m.probability)))
                .collect(),
            edge_inclusion,
            median_probability_model: edge_pairs(&summary.median_model),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoreReport {
    pub config: ConfigEcho,
    pub data: DataShape,
    pub requested: Vec<[usize; 2]>,
    pub score: ModelEntry,
}

impl ScoreReport {
    pub fn new(config: ConfigEcho, n: usize, p: usize, requested: &GraphStructure, score: &ModelScore) -> Self {
        ScoreReport {
            config,
            data: DataShape { n, p },
            requested: edge_pairs(requested),
            score: ModelEntry::new(score, None),
        }
    }
}

fn as_map<S: serde::Serializer>(pairs: &[(String, f64)], s: S) -> Result<S::Ok, S::Error> {
    s.collect_map(pairs.iter().map(|(k, v)| (k, v)))
}

pub fn edge_pairs(g: &GraphStructure) -> Vec<[usize; 2]> {
    g.edges().map(|e| [e.i() + 1, e.j() + 1]).collect()
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// One `i j` line per edge, 1-based, `i < j`.
pub fn write_edge_list<W: Write>(mut out: W, g: &GraphStructure) -> std::io::Result<()> {
    for e in g.edges() {
        writeln!(out, "{} {}", e.i() + 1, e.j() + 1)?;
    }
    Ok(())
}

/// Parses an edge list; blank lines and lines starting with `#` are skipped.
pub fn read_edge_list<R: BufRead>(input: R, p: usize) -> Result<GraphStructure, CliError> {
    let mut pairs = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line.map_err(|e| CliError::Data(format!("edge list: {e}")))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || CliError::Data(format!("edge list line {}: expected two vertex numbers, got {line:?}", k + 1));
        let mut it = line.split_whitespace().map(str::parse::<usize>);
        let (Some(Ok(a)), Some(Ok(b)), None) = (it.next(), it.next(), it.next()) else {
            return Err(bad());
        };
        if a == 0 || b == 0 || a > p || b > p {
            return Err(CliError::Data(format!(
                "edge list line {}: vertex out of range 1..={p}",
                k + 1
            )));
        }
        pairs.push((a - 1, b - 1));
    }
    GraphStructure::from_edges(p, pairs).map_err(|e| CliError::Data(format!("edge list: {e}")))
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    pub family: &'static str,
    pub p: usize,
    pub n: usize,
    pub reps: usize,
    pub sp_mean: f64,
    pub sp_se: f64,
    pub se_mean: f64,
    pub se_se: f64,
    pub mcc_mean: f64,
    pub mcc_se: f64,
    pub gl_sp_mean: f64,
    pub gl_sp_se: f64,
    pub gl_se_mean: f64,
    pub gl_se_se: f64,
    pub gl_mcc_mean: f64,
    pub gl_mcc_se: f64,
    pub config: String,
}

impl StudyRow {
    pub fn new(r: &StudyReport, config: &ConfigEcho) -> Self {
        let pair = |m: MeanSe| (m.mean, m.se);
        let (sp_mean, sp_se) = pair(r.mpp.sp);
        let (se_mean, se_se) = pair(r.mpp.se);
        let (mcc_mean, mcc_se) = pair(r.mpp.mcc);
        let (gl_sp_mean, gl_sp_se) = pair(r.gl.sp);
        let (gl_se_mean, gl_se_se) = pair(r.gl.se);
        let (gl_mcc_mean, gl_mcc_se) = pair(r.gl.mcc);
        StudyRow {
            family: r.spec.family.name(),
            p: r.spec.p,
            n: r.n,
            reps: r.reps,
            sp_mean,
            sp_se,
            se_mean,
            se_se,
            mcc_mean,
            mcc_se,
            gl_sp_mean,
            gl_sp_se,
            gl_se_mean,
            gl_se_se,
            gl_mcc_mean,
            gl_mcc_se,
            config: serde_json::to_string(config).expect("config serializes"),
        }
    }
}

pub fn write_study_csv<W: Write>(out: W, rows: &[StudyRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
