//! Intratextual feature views: logical document structure (11 dims), topic
//! distributions (98 dims, consumed as precomputed input) and quantitative
//! text structure (27 dims), plus the vertex-set cosine similarity that
//! compares aligned networks under any of the three views.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::{AlignmentSet, ItemNetwork};
use crate::ingest::{ArticleRecord, TOPIC_DIMS};
use crate::types::{FeatureView, ItemId};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("article `{0}` carries no topic vector")]
    MissingTopics(String),
    #[error("expected {expected} dimensions, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("entry {index} = {value} outside [0,1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("article `{0}` has no tokens")]
    EmptyText(String),
    #[error("no feature vector for vertex {0}")]
    MissingVector(ItemId),
}

/// Logical-document-structure counts of one article, in the fixed
/// 11-dimension layout.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureCounts {
    pub characters: u64,
    pub sections: u64,
    pub toc_breadth: u64,
    pub toc_depth: u64,
    pub internal_links: u64,
    pub external_links: u64,
    pub pictures: u64,
    pub tables: u64,
    pub authority_links: u64,
    pub references: u64,
    pub categories: u64,
}

impl StructureCounts {
    pub const DIM_NAMES: [&'static str; 11] = [
        "characters",
        "sections",
        "toc_breadth",
        "toc_depth",
        "internal_links",
        "external_links",
        "pictures",
        "tables",
        "authority_links",
        "references",
        "categories",
    ];
}

/// A feature vector under one of the three views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub view: FeatureView,
    pub values: Vec<f64>,
}

/// SV1: the 11 structure counts in their fixed order.
pub fn lds_vector(s: &StructureCounts) -> FeatureVector {
    let values = vec![
        s.characters as f64,
        s.sections as f64,
        s.toc_breadth as f64,
        s.toc_depth as f64,
        s.internal_links as f64,
        s.external_links as f64,
        s.pictures as f64,
        s.tables as f64,
        s.authority_links as f64,
        s.references as f64,
        s.categories as f64,
    ];
    FeatureVector { view: FeatureView::Sv1, values }
}

/// SV2: the stored 98-dimension topic vector, validated and passed through.
pub fn topic_vector(a: &ArticleRecord) -> Result<FeatureVector, FeatureError> {
    let topics =
        a.topic_vector.as_ref().ok_or_else(|| FeatureError::MissingTopics(a.title.clone()))?;
    if topics.len() != TOPIC_DIMS {
        return Err(FeatureError::DimensionMismatch { expected: TOPIC_DIMS, found: topics.len() });
    }
    if let Some((index, value)) =
        topics.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(FeatureError::OutOfRange { index, value: *value });
    }
    Ok(FeatureVector { view: FeatureView::Sv2, values: topics.clone() })
}

/// Names of the 27 quantitative-text-structure dimensions, in vector order.
pub const QTS_DIM_NAMES: [&str; 27] = [
    "adjusted_modulus",
    "alpha",
    "gini",
    "h_point",
    "entropy",
    "hapax_percentage",
    "curve_length",
    "lambda",
    "vocabulary_richness",
    "repeat_rate",
    "relative_repeat_rate",
    "thematic_concentration",
    "secondary_thematic_concentration",
    "type_token_ratio",
    "unique_trigrams",
    "avg_sentence_length",
    "difficult_words",
    "acf_lag_1",
    "acf_lag_2",
    "acf_lag_3",
    "acf_lag_4",
    "acf_lag_5",
    "acf_lag_6",
    "acf_lag_7",
    "acf_lag_8",
    "acf_lag_9",
    "acf_lag_10",
];

/// Tunables of the quantitative-text-structure view.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QtsConfig {
    /// Minimum character count for a token to count as a difficult word.
    pub difficult_word_min_chars: usize,
}

impl Default for QtsConfig {
    fn default() -> Self {
        QtsConfig { difficult_word_min_chars: 10 }
    }
}

/// SV3 with default configuration.
pub fn qts_vector(a: &ArticleRecord) -> Result<FeatureVector, FeatureError> {
    qts_vector_with(a, &QtsConfig::default())
}

/// SV3: 17 rank-frequency and information indices over the token stream,
/// followed by autocorrelations (lags 1..10) of the sentence association
/// series. A missing series zero-fills the autocorrelation dimensions.
pub fn qts_vector_with(a: &ArticleRecord, cfg: &QtsConfig) -> Result<FeatureVector, FeatureError> {
    let tokens: Vec<&str> =
        a.sentences.iter().flat_map(|s| s.iter().map(String::as_str)).collect();
    if tokens.is_empty() {
        return Err(FeatureError::EmptyText(a.title.clone()));
    }
    let n = tokens.len() as f64;
    let sentence_count = a.sentences.len() as f64;

    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for t in &tokens {
        *counts.entry(t).or_insert(0) += 1;
    }
    // Rank-frequency profile, descending.
    let mut freqs: Vec<f64> = counts.values().map(|&c| c as f64).collect();
    freqs.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let v = freqs.len() as f64;

    let h = h_point(&freqs);
    let entropy = -freqs
        .iter()
        .map(|f| {
            let p = f / n;
            p * p.log2()
        })
        .sum::<f64>();
    let hapax = freqs.iter().filter(|&&f| f == 1.0).count() as f64 / v;
    let repeat_rate: f64 = freqs.iter().map(|f| (f / n).powi(2)).sum();
    let relative_repeat_rate = if freqs.len() == 1 {
        0.0
    } else {
        (1.0 - repeat_rate.sqrt()) / (1.0 - 1.0 / v.sqrt())
    };
    let curve_length: f64 =
        freqs.windows(2).map(|w| (1.0 + (w[0] - w[1]).powi(2)).sqrt()).sum();
    let lambda = curve_length * n.log10() / n;
    let vocabulary_richness = v / n.sqrt();
    let gini = gini_coefficient(&freqs);
    let adjusted_modulus = (freqs[0].powi(2) + v.powi(2)).sqrt() / h;
    let alpha = freqs[0] / n;
    let pre_h_mass: f64 =
        freqs.iter().enumerate().filter(|(r, _)| ((r + 1) as f64) < h).map(|(_, f)| f).sum();
    let thematic_concentration = pre_h_mass / n;
    let secondary_mass: f64 = freqs
        .iter()
        .enumerate()
        .filter(|(r, _)| {
            let rank = (r + 1) as f64;
            rank >= h && rank <= 2.0 * h
        })
        .map(|(_, f)| f)
        .sum();
    let secondary_thematic_concentration = secondary_mass / n;
    let type_token_ratio = v / n;
    let unique_trigrams = trigram_ratio(&tokens);
    let avg_sentence_length = n / sentence_count;
    let difficult_words = tokens
        .iter()
        .filter(|t| t.chars().count() >= cfg.difficult_word_min_chars)
        .count() as f64;

    let mut values = vec![
        adjusted_modulus,
        alpha,
        gini,
        h,
        entropy,
        hapax,
        curve_length,
        lambda,
        vocabulary_richness,
        repeat_rate,
        relative_repeat_rate,
        thematic_concentration,
        secondary_thematic_concentration,
        type_token_ratio,
        unique_trigrams,
        avg_sentence_length,
        difficult_words,
    ];
    for lag in 1..=10 {
        let r = match &a.assoc_series {
            Some(series) if series.len() > lag => autocorrelation(series, lag),
            _ => 0.0,
        };
        values.push(r);
    }
    debug_assert_eq!(values.len(), FeatureView::Sv3.dims());
    Ok(FeatureVector { view: FeatureView::Sv3, values })
}

/// The h-point of a descending rank-frequency profile: the rank r with
/// f(r) = r, linearly interpolated between the straddling ranks when no
/// exact crossing exists. Single-type texts have h = 1 by convention.
pub fn h_point(freqs: &[f64]) -> f64 {
    if freqs.len() == 1 {
        return 1.0;
    }
    for (idx, &f) in freqs.iter().enumerate() {
        let rank = (idx + 1) as f64;
        if f == rank {
            return rank;
        }
        if f < rank {
            // Straddle between the previous rank and this one.
            let prev_rank = rank - 1.0;
            let prev_f = freqs[idx - 1];
            return (prev_f * rank - f * prev_rank) / (rank - prev_rank + prev_f - f);
        }
    }
    // Profile stays above the diagonal; extend with a zero-frequency rank.
    let last_rank = freqs.len() as f64;
    let last_f = freqs[freqs.len() - 1];
    last_f * (last_rank + 1.0) / (1.0 + last_f)
}

/// Gini coefficient of a frequency list (0 for one type or equifrequent
/// profiles).
fn gini_coefficient(freqs: &[f64]) -> f64 {
    let n = freqs.len() as f64;
    let total: f64 = freqs.iter().sum();
    if freqs.len() <= 1 || total == 0.0 {
        return 0.0;
    }
    let mut abs_diff_sum = 0.0;
    for a in freqs {
        for b in freqs {
            abs_diff_sum += (a - b).abs();
        }
    }
    abs_diff_sum / (2.0 * n * total)
}

fn trigram_ratio(tokens: &[&str]) -> f64 {
    if tokens.len() < 3 {
        return 0.0;
    }
    let mut distinct = std::collections::BTreeSet::new();
    let total = tokens.len() - 2;
    for w in tokens.windows(3) {
        distinct.insert((w[0], w[1], w[2]));
    }
    distinct.len() as f64 / total as f64
}

/// Autocorrelation at `lag`: the Pearson correlation of the series with its
/// lag-shifted self. Degenerate segments (constant, or too short) yield 0.
pub fn autocorrelation(series: &[f64], lag: usize) -> f64 {
    if series.len() <= lag {
        return 0.0;
    }
    let head = &series[..series.len() - lag];
    let tail = &series[lag..];
    pearson(head, tail)
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        dx += (x - mx).powi(2);
        dy += (y - my).powi(2);
    }
    if dx == 0.0 || dy == 0.0 {
        return 0.0;
    }
    num / (dx * dy).sqrt()
}

/// Per-vertex feature vectors of one network under one view.
pub type FeatureTable = BTreeMap<ItemId, Vec<f64>>;

/// Vertex-set cosine similarity of two aligned networks: dot products over
/// aligned pairs against the full vertex-set norms of both networks. Returns
/// 0 when either vertex set is empty.
pub fn vertex_cosine_similarity(
    i: &ItemNetwork,
    j: &ItemNetwork,
    alignment: &AlignmentSet,
    hi: &FeatureTable,
    hj: &FeatureTable,
) -> Result<f64, FeatureError> {
    let pairs: Vec<(ItemId, ItemId)> = alignment.pairs.iter().cloned().collect();
    vertex_cosine_with_pairs(i, j, &pairs, hi, hj)
}

/// Like [`vertex_cosine_similarity`] but over an explicit pair list, which
/// the permutation baseline uses to evaluate fake alignments.
pub fn vertex_cosine_with_pairs(
    i: &ItemNetwork,
    j: &ItemNetwork,
    pairs: &[(ItemId, ItemId)],
    hi: &FeatureTable,
    hj: &FeatureTable,
) -> Result<f64, FeatureError> {
    if i.is_empty() || j.is_empty() {
        return Ok(0.0);
    }
    let lookup = |table: &FeatureTable, q: &ItemId| -> Result<Vec<f64>, FeatureError> {
        table.get(q).cloned().ok_or_else(|| FeatureError::MissingVector(q.clone()))
    };
    let mut num = 0.0;
    for (v, w) in pairs {
        let hv = lookup(hi, v)?;
        let hw = lookup(hj, w)?;
        if hv.len() != hw.len() {
            return Err(FeatureError::DimensionMismatch { expected: hv.len(), found: hw.len() });
        }
        num += hv.iter().zip(&hw).map(|(a, b)| a * b).sum::<f64>();
    }
    let mut sq_i = 0.0;
    for q in i.vertices() {
        sq_i += lookup(hi, q)?.iter().map(|x| x * x).sum::<f64>();
    }
    let mut sq_j = 0.0;
    for q in j.vertices() {
        sq_j += lookup(hj, q)?.iter().map(|x| x * x).sum::<f64>();
    }
    let denom = sq_i.sqrt() * sq_j.sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(num / denom)
}
