//! The four intertextual graph-similarity measures over aligned item
//! networks: edit-overlap similarity (GES), arc-set Jaccard (EJS), the
//! personalized-PageRank DeltaCon variant, and the damped incidence cosine
//! (CGS).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::{check_same_area, ExtractError, ItemNetwork};
use crate::types::{ItemId, MeasureKind};

#[derive(Debug, Error)]
pub enum NetsimError {
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("unknown vertex {0}")]
    UnknownVertex(ItemId),
    #[error("pagerank did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("shareable item count is zero")]
    ZeroShareable,
    #[error("shareable item count {shareable} below the larger order {min_required}")]
    ShareableTooSmall { shareable: usize, min_required: usize },
    #[error("alpha {0} outside (0,1)")]
    InvalidAlpha(f64),
}

/// Outcome of one pairwise comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityResult {
    pub measure: MeasureKind,
    pub value: f64,
    pub order_i: usize,
    pub order_j: usize,
    pub size_i: usize,
    pub size_j: usize,
    pub shared_vertices: usize,
}

impl SimilarityResult {
    fn new(measure: MeasureKind, value: f64, i: &ItemNetwork, j: &ItemNetwork) -> Self {
        let shared = i.vertices().intersection(j.vertices()).count();
        SimilarityResult {
            measure,
            value,
            order_i: i.order(),
            order_j: j.order(),
            size_i: i.size(),
            size_j: j.size(),
            shared_vertices: shared,
        }
    }
}

/// Restricts both networks to the subgraphs induced by their shared
/// vertices.
pub fn induced_intersection(
    i: &ItemNetwork,
    j: &ItemNetwork,
) -> Result<(ItemNetwork, ItemNetwork), NetsimError> {
    check_same_area(i, j)?;
    let shared: BTreeSet<ItemId> = i.vertices().intersection(j.vertices()).cloned().collect();
    Ok((i.induced(&shared), j.induced(&shared)))
}

/// Edit-overlap similarity: one minus the symmetric differences of vertex
/// and arc sets, normalized by the union cardinalities. Two empty networks
/// count as identical.
pub fn ges(i: &ItemNetwork, j: &ItemNetwork) -> Result<SimilarityResult, NetsimError> {
    check_same_area(i, j)?;
    let v_union = i.vertices().union(j.vertices()).count();
    let v_shared = i.vertices().intersection(j.vertices()).count();
    let a_union = i.arcs().union(j.arcs()).count();
    let a_shared = i.arcs().intersection(j.arcs()).count();
    let v_sym = v_union - v_shared;
    let a_sym = a_union - a_shared;
    let value = if v_union + a_union == 0 {
        1.0
    } else {
        1.0 - (v_sym + a_sym) as f64 / (v_union + a_union) as f64
    };
    Ok(SimilarityResult::new(MeasureKind::Ges, value, i, j))
}

/// Arc-set Jaccard similarity over the intersection-induced subgraphs. The
/// Jaccard similarity of two empty arc sets is zero.
pub fn ejs(i: &ItemNetwork, j: &ItemNetwork) -> Result<SimilarityResult, NetsimError> {
    let (ri, rj) = induced_intersection(i, j)?;
    let union = ri.arcs().union(rj.arcs()).count();
    let shared = ri.arcs().intersection(rj.arcs()).count();
    let value = if union == 0 { 0.0 } else { shared as f64 / union as f64 };
    Ok(SimilarityResult::new(MeasureKind::Ejs, value, i, j))
}

/// Parameters of the personalized-PageRank iteration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PprOptions {
    /// Probability of following a link; the walk restarts at the source with
    /// probability `1 - alpha`.
    pub alpha: f64,
    /// L1 change threshold for convergence.
    pub eps: f64,
    pub max_iterations: usize,
}

impl Default for PprOptions {
    fn default() -> Self {
        PprOptions { alpha: 0.85, eps: 1e-10, max_iterations: 1000 }
    }
}

impl PprOptions {
    pub fn with_alpha(alpha: f64) -> Self {
        PprOptions { alpha, ..Default::default() }
    }

    fn validate(&self) -> Result<(), NetsimError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(NetsimError::InvalidAlpha(self.alpha));
        }
        Ok(())
    }
}

/// Personalized PageRank from `source`: the stationary distribution of a
/// walk that follows out-links with probability `alpha` and otherwise
/// restarts at the source. A vertex without out-links sends the walk back to
/// the source.
pub fn personalized_pagerank(
    n: &ItemNetwork,
    source: &ItemId,
    opts: &PprOptions,
) -> Result<BTreeMap<ItemId, f64>, NetsimError> {
    opts.validate()?;
    let index: Vec<&ItemId> = n.vertices().iter().collect();
    let pos: BTreeMap<&ItemId, usize> = index.iter().enumerate().map(|(k, q)| (*q, k)).collect();
    let src = *pos.get(source).ok_or_else(|| NetsimError::UnknownVertex(source.clone()))?;
    let adjacency = out_adjacency(n, &pos);
    let column = ppr_column(&adjacency, src, opts)?;
    Ok(index.into_iter().cloned().zip(column).collect())
}

fn out_adjacency(n: &ItemNetwork, pos: &BTreeMap<&ItemId, usize>) -> Vec<Vec<usize>> {
    let mut adjacency = vec![Vec::new(); pos.len()];
    for (s, t) in n.arcs() {
        adjacency[pos[s]].push(pos[t]);
    }
    adjacency
}

fn ppr_column(
    adjacency: &[Vec<usize>],
    source: usize,
    opts: &PprOptions,
) -> Result<Vec<f64>, NetsimError> {
    let n = adjacency.len();
    let mut p = vec![0.0; n];
    p[source] = 1.0;
    for _ in 0..opts.max_iterations {
        let mut next = vec![0.0; n];
        next[source] = 1.0 - opts.alpha;
        for (v, outs) in adjacency.iter().enumerate() {
            if outs.is_empty() {
                next[source] += opts.alpha * p[v];
            } else {
                let share = opts.alpha * p[v] / outs.len() as f64;
                for &w in outs {
                    next[w] += share;
                }
            }
        }
        let delta: f64 = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        p = next;
        if delta < opts.eps {
            return Ok(p);
        }
    }
    Err(NetsimError::NonConvergence(opts.max_iterations))
}

/// Per-source-vertex affinity profiles of one network: column `v` holds the
/// personalized-PageRank distribution started at `v`. Every column is a
/// probability distribution.
#[derive(Debug, Clone)]
pub struct AffinityMatrix {
    pub index: Vec<ItemId>,
    /// `columns[v][w]` is the affinity of `w` seen from source `v`.
    pub columns: Vec<Vec<f64>>,
}

impl AffinityMatrix {
    pub fn from_network(n: &ItemNetwork, opts: &PprOptions) -> Result<Self, NetsimError> {
        opts.validate()?;
        let index: Vec<ItemId> = n.vertices().iter().cloned().collect();
        let pos: BTreeMap<&ItemId, usize> =
            n.vertices().iter().enumerate().map(|(k, q)| (q, k)).collect();
        let adjacency = out_adjacency(n, &pos);
        let columns = (0..index.len())
            .map(|src| ppr_column(&adjacency, src, opts))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AffinityMatrix { index, columns })
    }
}

/// The root-of-squared-differences distance between the element-wise square
/// roots of the two affinity matrices (a metric on node-aligned graphs).
pub fn deltacon_distance(
    i: &ItemNetwork,
    j: &ItemNetwork,
    opts: &PprOptions,
) -> Result<f64, NetsimError> {
    let (ri, rj) = induced_intersection(i, j)?;
    if ri.is_empty() {
        return Ok(f64::INFINITY);
    }
    let si = AffinityMatrix::from_network(&ri, opts)?;
    let sj = AffinityMatrix::from_network(&rj, opts)?;
    let mut sum = 0.0;
    for (ci, cj) in si.columns.iter().zip(&sj.columns) {
        for (a, b) in ci.iter().zip(cj) {
            sum += (a.sqrt() - b.sqrt()).powi(2);
        }
    }
    Ok(sum.sqrt())
}

/// DeltaCon similarity `1 / (1 + d)` over the intersection-induced
/// subgraphs. An empty intersection yields 0: with no shared material the
/// networks are maximally dissimilar, not identical.
pub fn deltacon(
    i: &ItemNetwork,
    j: &ItemNetwork,
    opts: &PprOptions,
) -> Result<SimilarityResult, NetsimError> {
    let d = deltacon_distance(i, j, opts)?;
    let value = if d.is_infinite() { 0.0 } else { 1.0 / (1.0 + d) };
    Ok(SimilarityResult::new(MeasureKind::DeltaCon, value, i, j))
}

/// Cosine graph similarity: cosine over binary incidence vectors with one
/// component per candidate vertex and one per candidate arc, damped by the
/// fraction of shareable items the networks actually share.
pub fn cgs(
    i: &ItemNetwork,
    j: &ItemNetwork,
    shareable: usize,
) -> Result<SimilarityResult, NetsimError> {
    check_same_area(i, j)?;
    if shareable == 0 {
        return Err(NetsimError::ZeroShareable);
    }
    let min_required = i.order().max(j.order());
    if shareable < min_required {
        return Err(NetsimError::ShareableTooSmall { shareable, min_required });
    }
    let features_i = i.order() + i.size();
    let features_j = j.order() + j.size();
    let shared_vertices = i.vertices().intersection(j.vertices()).count();
    let shared_arcs = i.arcs().intersection(j.arcs()).count();
    let base = if features_i == 0 || features_j == 0 {
        0.0
    } else {
        (shared_vertices + shared_arcs) as f64
            / ((features_i as f64).sqrt() * (features_j as f64).sqrt())
    };
    let value = base * shared_vertices as f64 / shareable as f64;
    Ok(SimilarityResult::new(MeasureKind::Cgs, value, i, j))
}

/// One of the four structural measures together with its parameters, so
/// callers can evaluate uniformly.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum GraphMeasure {
    Ges,
    Ejs,
    DeltaCon(PprOptions),
    Cgs { shareable: usize },
}

impl GraphMeasure {
    pub fn kind(&self) -> MeasureKind {
        match self {
            GraphMeasure::Ges => MeasureKind::Ges,
            GraphMeasure::Ejs => MeasureKind::Ejs,
            GraphMeasure::DeltaCon(_) => MeasureKind::DeltaCon,
            GraphMeasure::Cgs { .. } => MeasureKind::Cgs,
        }
    }

    pub fn evaluate(
        &self,
        i: &ItemNetwork,
        j: &ItemNetwork,
    ) -> Result<SimilarityResult, NetsimError> {
        match self {
            GraphMeasure::Ges => ges(i, j),
            GraphMeasure::Ejs => ejs(i, j),
            GraphMeasure::DeltaCon(opts) => deltacon(i, j, opts),
            GraphMeasure::Cgs { shareable } => cgs(i, j, *shareable),
        }
    }
}
