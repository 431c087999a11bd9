//! Downstream analytics over computed similarities: size statistics,
//! rank correlations, language networks with strength centralities, and
//! (weighted) distance correlations.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::types::{Lang, MeasureKind};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("list lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {min} values, found {len}")]
    TooShort { len: usize, min: usize },
    #[error("size ratio undefined for two empty networks")]
    DivisionByZero,
    #[error("language networks cover different vertex sets")]
    VertexSetMismatch,
    #[error("measure {0} missing from the ranking input")]
    MissingMeasure(MeasureKind),
    #[error("maximum observed similarity must be positive, got {0}")]
    NonPositiveMax(f64),
    #[error("similarity matrix must not be empty")]
    EmptyMatrix,
}

/// The four ways of summarizing a pair of network orders into one size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SizeKind {
    Min,
    Max,
    Sum,
    Ratio,
}

impl SizeKind {
    pub const ALL: [SizeKind; 4] = [SizeKind::Min, SizeKind::Max, SizeKind::Sum, SizeKind::Ratio];

    pub fn as_str(self) -> &'static str {
        match self {
            SizeKind::Min => "min",
            SizeKind::Max => "max",
            SizeKind::Sum => "sum",
            SizeKind::Ratio => "ratio",
        }
    }
}

/// The selected size statistic of two network orders.
pub fn size_value(order_i: usize, order_j: usize, kind: SizeKind) -> Result<f64, AnalysisError> {
    let (a, b) = (order_i as f64, order_j as f64);
    Ok(match kind {
        SizeKind::Min => a.min(b),
        SizeKind::Max => a.max(b),
        SizeKind::Sum => a + b,
        SizeKind::Ratio => {
            let max = a.max(b);
            if max == 0.0 {
                return Err(AnalysisError::DivisionByZero);
            }
            a.min(b) / max
        }
    })
}

/// Spearman rank correlation with its t-approximation p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpearmanResult {
    pub rho: f64,
    pub p_value: f64,
    /// Set when either input is constant, in which case rho is fixed to 0.
    pub degenerate: bool,
}

/// Mid-rank (average) ranks of a value list.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut idx = 0;
    while idx < n {
        let mut end = idx + 1;
        while end < n && values[order[end]] == values[order[idx]] {
            end += 1;
        }
        // Tied block spans ranks idx+1 ..= end; assign the average.
        let rank = (idx + 1 + end) as f64 / 2.0;
        for &position in &order[idx..end] {
            ranks[position] = rank;
        }
        idx = end;
    }
    ranks
}

/// Spearman's rank correlation over mid-ranked data. Constant input is
/// flagged degenerate with rho = 0; the p-value uses the t-approximation
/// with n - 2 degrees of freedom.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<SpearmanResult, AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.len() < 3 {
        return Err(AnalysisError::TooShort { len: xs.len(), min: 3 });
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        num += (a - mx) * (b - my);
        dx += (a - mx).powi(2);
        dy += (b - my).powi(2);
    }
    if dx == 0.0 || dy == 0.0 {
        return Ok(SpearmanResult { rho: 0.0, p_value: 1.0, degenerate: true });
    }
    let rho = (num / (dx * dy).sqrt()).clamp(-1.0, 1.0);
    let p_value = if rho.abs() >= 1.0 {
        0.0
    } else {
        let df = n - 2.0;
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    Ok(SpearmanResult { rho, p_value, degenerate: false })
}

/// Pairwise Spearman correlations of the subject-area orderings induced by
/// each measure's per-area mean similarities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingCorrelation {
    pub measures: Vec<MeasureKind>,
    pub rho: Vec<Vec<f64>>,
    pub p_values: Vec<Vec<f64>>,
}

pub fn measure_ranking_correlation(
    area_means: &BTreeMap<MeasureKind, Vec<f64>>,
) -> Result<RankingCorrelation, AnalysisError> {
    for m in MeasureKind::ALL {
        if !area_means.contains_key(&m) {
            return Err(AnalysisError::MissingMeasure(m));
        }
    }
    let measures: Vec<MeasureKind> = MeasureKind::ALL.to_vec();
    let k = measures.len();
    let mut rho = vec![vec![0.0; k]; k];
    let mut p_values = vec![vec![0.0; k]; k];
    for (a, ma) in measures.iter().enumerate() {
        for (b, mb) in measures.iter().enumerate() {
            let r = spearman(&area_means[ma], &area_means[mb])?;
            rho[a][b] = r.rho;
            p_values[a][b] = r.p_value;
        }
    }
    Ok(RankingCorrelation { measures, rho, p_values })
}

/// One measure's language-by-language similarity matrix for one subject
/// area. Languages are sorted by ascending network order (ties by code);
/// the diagonal holds self-similarities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub area: String,
    pub measure: MeasureKind,
    pub languages: Vec<Lang>,
    pub orders: Vec<usize>,
    pub sizes: Vec<usize>,
    pub values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    /// Assembles a matrix from per-pair values. `entries` maps unordered
    /// language pairs (and self pairs) to similarity values; `meta` carries
    /// each language's network order and size.
    pub fn from_pairs(
        area: impl Into<String>,
        measure: MeasureKind,
        meta: &BTreeMap<Lang, (usize, usize)>,
        entries: &BTreeMap<(Lang, Lang), f64>,
    ) -> Result<Self, AnalysisError> {
        if meta.is_empty() {
            return Err(AnalysisError::EmptyMatrix);
        }
        let mut languages: Vec<Lang> = meta.keys().cloned().collect();
        languages.sort_by(|a, b| {
            meta[a].0.cmp(&meta[b].0).then_with(|| a.cmp(b))
        });
        let orders: Vec<usize> = languages.iter().map(|l| meta[l].0).collect();
        let sizes: Vec<usize> = languages.iter().map(|l| meta[l].1).collect();
        let n = languages.len();
        let mut values = vec![vec![0.0; n]; n];
        for (r, li) in languages.iter().enumerate() {
            for (c, lj) in languages.iter().enumerate() {
                let key = if li <= lj {
                    (li.clone(), lj.clone())
                } else {
                    (lj.clone(), li.clone())
                };
                values[r][c] = *entries.get(&key).unwrap_or(&0.0);
            }
        }
        Ok(SimilarityMatrix { area: area.into(), measure, languages, orders, sizes, values })
    }

    pub fn len(&self) -> usize {
        self.languages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.languages.is_empty()
    }

    /// Off-diagonal values (each unordered pair once).
    pub fn off_diagonal(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for r in 0..self.len() {
            for c in (r + 1)..self.len() {
                out.push(self.values[r][c]);
            }
        }
        out
    }
}

/// A weighted language graph obtained by thresholding a similarity matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageNetwork {
    pub vertices: Vec<LanguageNode>,
    pub edges: Vec<LanguageEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageNode {
    pub lang: Lang,
    pub order: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageEdge {
    pub a: Lang,
    pub b: Lang,
    pub weight: f64,
}

impl LanguageNetwork {
    pub fn language_set(&self) -> BTreeSet<Lang> {
        self.vertices.iter().map(|v| v.lang.clone()).collect()
    }

    /// Restricts the network to the given languages.
    pub fn restricted(&self, keep: &BTreeSet<Lang>) -> LanguageNetwork {
        LanguageNetwork {
            vertices: self.vertices.iter().filter(|v| keep.contains(&v.lang)).cloned().collect(),
            edges: self
                .edges
                .iter()
                .filter(|e| keep.contains(&e.a) && keep.contains(&e.b))
                .cloned()
                .collect(),
        }
    }
}

/// Keeps every edge whose similarity is at least `threshold` (edges exactly
/// at the threshold survive). Self-pairs never become edges.
pub fn build_language_network(m: &SimilarityMatrix, threshold: f64) -> LanguageNetwork {
    let vertices = m
        .languages
        .iter()
        .enumerate()
        .map(|(idx, lang)| LanguageNode {
            lang: lang.clone(),
            order: m.orders[idx],
            size: m.sizes[idx],
        })
        .collect();
    let mut edges = Vec::new();
    for r in 0..m.len() {
        for c in (r + 1)..m.len() {
            let weight = m.values[r][c];
            if weight >= threshold {
                edges.push(LanguageEdge {
                    a: m.languages[r].clone(),
                    b: m.languages[c].clone(),
                    weight,
                });
            }
        }
    }
    LanguageNetwork { vertices, edges }
}

/// Vertex strength: the sum of incident edge weights.
pub fn strength_centrality(n: &LanguageNetwork) -> BTreeMap<Lang, f64> {
    let mut strengths: BTreeMap<Lang, f64> =
        n.vertices.iter().map(|v| (v.lang.clone(), 0.0)).collect();
    for e in &n.edges {
        *strengths.entry(e.a.clone()).or_insert(0.0) += e.weight;
        *strengths.entry(e.b.clone()).or_insert(0.0) += e.weight;
    }
    strengths
}

/// Szekely's sample distance correlation via doubly-centered pairwise
/// distance matrices; 0 when either distance variance vanishes.
pub fn distance_correlation(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.len() < 2 {
        return Err(AnalysisError::TooShort { len: xs.len(), min: 2 });
    }
    let a = centered_distances(xs);
    let b = centered_distances(ys);
    let n = xs.len();
    let mut dcov = 0.0;
    let mut dvar_x = 0.0;
    let mut dvar_y = 0.0;
    for r in 0..n {
        for c in 0..n {
            dcov += a[r][c] * b[r][c];
            dvar_x += a[r][c] * a[r][c];
            dvar_y += b[r][c] * b[r][c];
        }
    }
    let denom = (dvar_x * dvar_y).sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((dcov / denom).max(0.0).sqrt())
}

fn centered_distances(values: &[f64]) -> Vec<Vec<f64>> {
    let n = values.len();
    let mut d = vec![vec![0.0; n]; n];
    for r in 0..n {
        for c in 0..n {
            d[r][c] = (values[r] - values[c]).abs();
        }
    }
    let grand = d.iter().flatten().sum::<f64>() / (n * n) as f64;
    let row_means: Vec<f64> = d.iter().map(|row| row.iter().sum::<f64>() / n as f64).collect();
    let mut centered = vec![vec![0.0; n]; n];
    for r in 0..n {
        for c in 0..n {
            centered[r][c] = d[r][c] - row_means[r] - row_means[c] + grand;
        }
    }
    centered
}

/// Distance correlation of two language networks' strength profiles,
/// weighted by their joint strength relative to the maximum attainable in
/// complete networks whose edges all carry the best observed similarity.
pub fn weighted_distance_correlation(
    n1: &LanguageNetwork,
    n2: &LanguageNetwork,
    measure_max: f64,
) -> Result<f64, AnalysisError> {
    if n1.language_set() != n2.language_set() {
        return Err(AnalysisError::VertexSetMismatch);
    }
    if measure_max <= 0.0 {
        return Err(AnalysisError::NonPositiveMax(measure_max));
    }
    let s1 = strength_centrality(n1);
    let s2 = strength_centrality(n2);
    let langs: Vec<&Lang> = s1.keys().collect();
    let l = langs.len();
    let xs: Vec<f64> = langs.iter().map(|k| s1[*k]).collect();
    let ys: Vec<f64> = langs.iter().map(|k| s2[*k]).collect();
    let total: f64 = xs.iter().sum::<f64>() + ys.iter().sum::<f64>();
    // Each undirected edge contributes to two strengths, so a complete
    // network of maximal weights totals L * (L - 1) * measure_max.
    let denom = 2.0 * (l * (l.saturating_sub(1))) as f64 * measure_max;
    if denom == 0.0 {
        return Ok(0.0);
    }
    let weight = total / denom;
    Ok(weight * distance_correlation(&xs, &ys)?)
}

/// Comparison volume for a roster of per-area non-empty language counts:
/// every measure compares all unordered pairs plus every self pair.
pub fn expected_comparisons(n_measures: usize, per_area_langs: &[usize]) -> u64 {
    per_area_langs
        .iter()
        .map(|&l| {
            let l = l as u64;
            n_measures as u64 * (l * (l - 1) / 2 + l)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn size_values_of_10_and_40() {
        assert_eq!(size_value(10, 40, SizeKind::Min).unwrap(), 10.0);
        assert_eq!(size_value(10, 40, SizeKind::Max).unwrap(), 40.0);
        assert_eq!(size_value(10, 40, SizeKind::Sum).unwrap(), 50.0);
        assert_eq!(size_value(10, 40, SizeKind::Ratio).unwrap(), 0.25);
    }

    #[test]
    fn size_ratio_edge_cases() {
        assert_eq!(size_value(7, 7, SizeKind::Ratio).unwrap(), 1.0);
        assert_eq!(size_value(0, 5, SizeKind::Ratio).unwrap(), 0.0);
        assert!(matches!(
            size_value(0, 0, SizeKind::Ratio),
            Err(AnalysisError::DivisionByZero)
        ));
    }

    #[test]
    fn spearman_of_increasing_lists_is_one() {
        let r = spearman(&[1.0, 2.0, 5.0, 9.0], &[2.0, 3.0, 4.0, 50.0]).unwrap();
        assert_abs_diff_eq!(r.rho, 1.0, epsilon = 1e-15);
        assert_eq!(r.p_value, 0.0);
    }

    #[test]
    fn spearman_of_reversed_list_is_minus_one() {
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[9.0, 7.0, 5.0, 1.0]).unwrap();
        assert_abs_diff_eq!(r.rho, -1.0, epsilon = 1e-15);
    }

    /// Hand-ranked Pearson oracle: ranks (1, 2.5, 2.5, 4) vs (1, 2, 3, 4)
    /// give 4.5 / sqrt(22.5).
    #[test]
    fn spearman_mid_rank_example() {
        let r = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let oracle = 4.5 / 22.5f64.sqrt();
        assert_abs_diff_eq!(r.rho, oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(r.rho, 0.9487, epsilon = 1e-4);
        assert!(r.p_value > 0.0 && r.p_value < 1.0);
    }

    #[test]
    fn spearman_rejects_bad_input() {
        assert!(matches!(
            spearman(&[1.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(AnalysisError::LengthMismatch { .. })
        ));
        assert!(matches!(
            spearman(&[1.0, 2.0], &[1.0, 2.0]),
            Err(AnalysisError::TooShort { .. })
        ));
    }

    #[test]
    fn spearman_flags_constant_input() {
        let r = spearman(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.rho, 0.0);
    }

    fn all_measure_means(base: &[f64]) -> BTreeMap<MeasureKind, Vec<f64>> {
        MeasureKind::ALL.iter().map(|m| (*m, base.to_vec())).collect()
    }

    #[test]
    fn ranking_correlation_diagonal_is_one() {
        let means = all_measure_means(&[0.1, 0.5, 0.3]);
        let rc = measure_ranking_correlation(&means).unwrap();
        for k in 0..7 {
            assert_abs_diff_eq!(rc.rho[k][k], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ranking_correlation_detects_negation() {
        let mut means = all_measure_means(&[0.1, 0.5, 0.3]);
        means.insert(MeasureKind::Ejs, vec![-0.1, -0.5, -0.3]);
        let rc = measure_ranking_correlation(&means).unwrap();
        let ges = rc.measures.iter().position(|m| *m == MeasureKind::Ges).unwrap();
        let ejs = rc.measures.iter().position(|m| *m == MeasureKind::Ejs).unwrap();
        assert_abs_diff_eq!(rc.rho[ges][ejs], -1.0, epsilon = 1e-12);
    }

    /// Three-area fixture checked against the spearman oracle directly.
    #[test]
    fn ranking_correlation_matches_spearman() {
        let mut means = all_measure_means(&[0.2, 0.8, 0.5]);
        means.insert(MeasureKind::Cgs, vec![0.9, 0.1, 0.4]);
        let rc = measure_ranking_correlation(&means).unwrap();
        let sv1 = rc.measures.iter().position(|m| *m == MeasureKind::Sv1).unwrap();
        let cgs = rc.measures.iter().position(|m| *m == MeasureKind::Cgs).unwrap();
        let oracle = spearman(&[0.2, 0.8, 0.5], &[0.9, 0.1, 0.4]).unwrap();
        assert_eq!(rc.rho[sv1][cgs], oracle.rho);
        assert_eq!(rc.p_values[sv1][cgs], oracle.p_value);
    }

    #[test]
    fn ranking_correlation_requires_all_measures() {
        let mut means = all_measure_means(&[0.1, 0.2, 0.3]);
        means.remove(&MeasureKind::DeltaCon);
        assert!(matches!(
            measure_ranking_correlation(&means),
            Err(AnalysisError::MissingMeasure(MeasureKind::DeltaCon))
        ));
    }

    fn matrix(languages: &[(&str, usize)], weights: &[(&str, &str, f64)]) -> SimilarityMatrix {
        let meta: BTreeMap<Lang, (usize, usize)> =
            languages.iter().map(|(l, o)| (Lang::new(*l), (*o, 0))).collect();
        let mut entries = BTreeMap::new();
        for (a, b, w) in weights {
            let (a, b) = (Lang::new(*a), Lang::new(*b));
            let key = if a <= b { (a, b) } else { (b, a) };
            entries.insert(key, *w);
        }
        SimilarityMatrix::from_pairs("area", MeasureKind::Ges, &meta, &entries).unwrap()
    }

    #[test]
    fn matrix_orders_languages_by_network_order() {
        let m = matrix(&[("de", 9), ("en", 2), ("fr", 5)], &[]);
        let langs: Vec<&str> = m.languages.iter().map(|l| l.as_str()).collect();
        assert_eq!(langs, vec!["en", "fr", "de"]);
        assert_eq!(m.orders, vec![2, 5, 9]);
    }

    #[test]
    fn boundary_weights_survive_threshold() {
        let m = matrix(
            &[("a", 1), ("b", 1), ("c", 1)],
            &[("a", "b", 0.4), ("a", "c", 0.4), ("b", "c", 0.4)],
        );
        let net = build_language_network(&m, 0.4);
        assert_eq!(net.edges.len(), 3);
    }

    #[test]
    fn below_threshold_network_is_edgeless() {
        let m = matrix(&[("a", 1), ("b", 1)], &[("a", "b", 0.1)]);
        let net = build_language_network(&m, 0.5);
        assert!(net.edges.is_empty());
        assert_eq!(net.vertices.len(), 2);
    }

    /// Filter oracle: exactly the pairs at or above the threshold remain.
    #[test]
    fn threshold_filter_example() {
        let m = matrix(
            &[("a", 1), ("b", 1), ("c", 1)],
            &[("a", "b", 0.9), ("a", "c", 0.1), ("b", "c", 0.5)],
        );
        let net = build_language_network(&m, 0.4);
        let kept: BTreeSet<(String, String)> = net
            .edges
            .iter()
            .map(|e| (e.a.to_string(), e.b.to_string()))
            .collect();
        let oracle: BTreeSet<(String, String)> = [("a", "b"), ("b", "c")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        assert_eq!(kept, oracle);
    }

    #[test]
    fn higher_threshold_gives_edge_subset() {
        let m = matrix(
            &[("a", 1), ("b", 1), ("c", 1)],
            &[("a", "b", 0.9), ("a", "c", 0.3), ("b", "c", 0.5)],
        );
        let low = build_language_network(&m, 0.2);
        let high = build_language_network(&m, 0.5);
        let low_set: BTreeSet<_> =
            low.edges.iter().map(|e| (e.a.clone(), e.b.clone())).collect();
        for e in &high.edges {
            assert!(low_set.contains(&(e.a.clone(), e.b.clone())));
        }
    }

    #[test]
    fn strength_of_isolated_vertex_is_zero() {
        let m = matrix(&[("a", 1), ("b", 1)], &[]);
        let net = build_language_network(&m, 0.5);
        let s = strength_centrality(&net);
        assert_eq!(s[&Lang::new("a")], 0.0);
    }

    #[test]
    fn strength_sums_incident_weights() {
        let m = matrix(
            &[("a", 1), ("b", 1), ("c", 1)],
            &[("a", "b", 0.2), ("a", "c", 0.3), ("b", "c", 0.0)],
        );
        let net = build_language_network(&m, 0.1);
        let s = strength_centrality(&net);
        assert_abs_diff_eq!(s[&Lang::new("a")], 0.5, epsilon = 1e-15);
    }

    /// Hand sum: each vertex of a unit-weight triangle touches two edges.
    #[test]
    fn triangle_strengths_are_two() {
        let m = matrix(
            &[("a", 1), ("b", 1), ("c", 1)],
            &[("a", "b", 1.0), ("a", "c", 1.0), ("b", "c", 1.0)],
        );
        let net = build_language_network(&m, 0.5);
        for (_, v) in strength_centrality(&net) {
            assert_abs_diff_eq!(v, 2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn dcor_is_one_for_affine_dependence() {
        let xs = [1.0, 4.0, 2.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
        assert_abs_diff_eq!(distance_correlation(&xs, &ys).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dcor_of_constant_input_is_zero() {
        assert_eq!(distance_correlation(&[2.0, 2.0, 2.0], &[1.0, 5.0, 9.0]).unwrap(), 0.0);
    }

    /// Independent double-centering oracle, written out step by step.
    fn dcor_oracle(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len();
        let center = |vals: &[f64]| -> Vec<Vec<f64>> {
            let mut d = vec![vec![0.0; n]; n];
            for r in 0..n {
                for c in 0..n {
                    d[r][c] = (vals[r] - vals[c]).abs();
                }
            }
            let grand: f64 = d.iter().flatten().sum::<f64>() / (n * n) as f64;
            let rows: Vec<f64> = (0..n).map(|r| d[r].iter().sum::<f64>() / n as f64).collect();
            let cols: Vec<f64> =
                (0..n).map(|c| (0..n).map(|r| d[r][c]).sum::<f64>() / n as f64).collect();
            (0..n)
                .map(|r| (0..n).map(|c| d[r][c] - rows[r] - cols[c] + grand).collect())
                .collect()
        };
        let a = center(xs);
        let b = center(ys);
        let mean = |m: &Vec<Vec<f64>>, o: &Vec<Vec<f64>>| -> f64 {
            let mut s = 0.0;
            for r in 0..n {
                for c in 0..n {
                    s += m[r][c] * o[r][c];
                }
            }
            s / (n * n) as f64
        };
        let dcov2 = mean(&a, &b);
        let dvarx = mean(&a, &a);
        let dvary = mean(&b, &b);
        (dcov2 / (dvarx * dvary).sqrt()).sqrt()
    }

    #[test]
    fn dcor_three_point_example() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 2.0];
        let oracle = dcor_oracle(&xs, &ys);
        let got = distance_correlation(&xs, &ys).unwrap();
        assert_abs_diff_eq!(got, oracle, epsilon = 1e-12);
        // The oracle evaluates to sqrt(0.7).
        assert_abs_diff_eq!(got, 0.7f64.sqrt(), epsilon = 1e-12);
    }

    fn complete_network(langs: &[&str], weight: f64) -> LanguageNetwork {
        let vertices =
            langs.iter().map(|l| LanguageNode { lang: Lang::new(*l), order: 1, size: 0 }).collect();
        let mut edges = Vec::new();
        for (i, a) in langs.iter().enumerate() {
            for b in &langs[i + 1..] {
                edges.push(LanguageEdge { a: Lang::new(*a), b: Lang::new(*b), weight });
            }
        }
        LanguageNetwork { vertices, edges }
    }

    #[test]
    fn weighted_dcor_boundary_weight_one() {
        let n = complete_network(&["a", "b", "c"], 0.8);
        let got = weighted_distance_correlation(&n, &n, 0.8).unwrap();
        // Maximal-strength networks give weight exactly 1, so the result is
        // the plain distance correlation of the (constant) strengths.
        let s = strength_centrality(&n);
        let xs: Vec<f64> = s.values().copied().collect();
        let dcor = distance_correlation(&xs, &xs).unwrap();
        assert_abs_diff_eq!(got, dcor, epsilon = 1e-12);
    }

    #[test]
    fn weighted_dcor_of_edgeless_networks_is_zero() {
        let mut n = complete_network(&["a", "b", "c"], 0.8);
        n.edges.clear();
        assert_eq!(weighted_distance_correlation(&n, &n, 0.8).unwrap(), 0.0);
    }

    /// Arithmetic oracle for three languages with hand-summed strengths.
    #[test]
    fn weighted_dcor_three_language_fixture() {
        let vertices: Vec<LanguageNode> = ["a", "b", "c"]
            .iter()
            .map(|l| LanguageNode { lang: Lang::new(*l), order: 1, size: 0 })
            .collect();
        let n1 = LanguageNetwork {
            vertices: vertices.clone(),
            edges: vec![
                LanguageEdge { a: Lang::new("a"), b: Lang::new("b"), weight: 0.6 },
                LanguageEdge { a: Lang::new("b"), b: Lang::new("c"), weight: 0.2 },
            ],
        };
        let n2 = LanguageNetwork {
            vertices,
            edges: vec![LanguageEdge { a: Lang::new("a"), b: Lang::new("c"), weight: 0.4 }],
        };
        let measure_max = 0.6;
        // Strengths: n1 = (a 0.6, b 0.8, c 0.2), n2 = (a 0.4, b 0, c 0.4).
        let total = (0.6 + 0.8 + 0.2) + (0.4 + 0.0 + 0.4);
        let weight = total / (2.0 * 6.0 * measure_max);
        let dcor =
            distance_correlation(&[0.6, 0.8, 0.2], &[0.4, 0.0, 0.4]).unwrap();
        let got = weighted_distance_correlation(&n1, &n2, measure_max).unwrap();
        assert_abs_diff_eq!(got, weight * dcor, epsilon = 1e-12);
    }

    #[test]
    fn weighted_dcor_rejects_vertex_mismatch() {
        let n1 = complete_network(&["a", "b"], 0.5);
        let n2 = complete_network(&["a", "c"], 0.5);
        assert!(matches!(
            weighted_distance_correlation(&n1, &n2, 0.5),
            Err(AnalysisError::VertexSetMismatch)
        ));
    }

    #[test]
    fn comparison_count_identity_for_full_roster() {
        // 35 languages in each of 25 areas under 7 measures.
        assert_eq!(expected_comparisons(7, &[35; 25]), 110_250);
    }

    proptest! {
        #[test]
        fn spearman_invariant_under_monotone_transforms(
            pairs in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..12),
        ) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let base = spearman(&xs, &ys).unwrap();
            let tx: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
            let ty: Vec<f64> = ys.iter().map(|y| 3.0 * y + 7.0).collect();
            let transformed = spearman(&tx, &ty).unwrap();
            prop_assert!((base.rho - transformed.rho).abs() < 1e-9);
        }

        #[test]
        fn dcor_self_and_symmetry(
            pairs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 2..10),
        ) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let xy = distance_correlation(&xs, &ys).unwrap();
            let yx = distance_correlation(&ys, &xs).unwrap();
            prop_assert!((xy - yx).abs() < 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&xy));
            let constant = xs.iter().all(|x| *x == xs[0]);
            if !constant {
                let xx = distance_correlation(&xs, &xs).unwrap();
                prop_assert!((xx - 1.0).abs() < 1e-9);
            }
        }
    }
}
