//! Randomized baselines for observed similarities: uniform same-order/
//! same-size graph randomization as a structural lower bound, random
//! re-pairings of articles as a content lower bound, and the observed
//! upper-bound curve over minimum network orders.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::extract::ItemNetwork;
use crate::features::{vertex_cosine_similarity, vertex_cosine_with_pairs, FeatureError, FeatureTable};
use crate::netsim::{GraphMeasure, NetsimError, SimilarityResult};
use crate::types::{ItemId, MeasureKind};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("cannot place {size} arcs in a graph of order {order}")]
    InfeasibleSize { order: usize, size: usize },
    #[error("network has no vertices")]
    EmptyNetwork,
    #[error("results mix measures {0} and {1}")]
    MixedMeasures(MeasureKind, MeasureKind),
    #[error("no results supplied")]
    NoResults,
    #[error(transparent)]
    Netsim(#[from] NetsimError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Stable seed derivation: the run seed mixed with per-use labels through
/// SHA-256, so parallel and sequential execution draw identical streams.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for part in parts {
        hasher.update(part.to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has at least 8 bytes"))
}

/// Stable label hash for seeding by textual context (area, languages, ...).
pub fn label_hash(label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has at least 8 bytes"))
}

/// Uniform random counterpart of a network: the same vertex set, with
/// exactly `size` arcs drawn uniformly without replacement from all ordered
/// non-self pairs. Deterministic per seed.
pub fn er_randomize(n: &ItemNetwork, seed: u64) -> Result<ItemNetwork, BaselineError> {
    let order = n.order();
    let size = n.size();
    let slots = order.saturating_mul(order.saturating_sub(1));
    if size > slots {
        return Err(BaselineError::InfeasibleSize { order, size });
    }
    let vertices: Vec<&ItemId> = n.vertices().iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, slots, size);
    let arcs = picks
        .iter()
        .map(|k| {
            let src = k / (order - 1);
            let mut dst = k % (order - 1);
            if dst >= src {
                dst += 1;
            }
            (vertices[src].clone(), vertices[dst].clone())
        })
        .collect();
    Ok(ItemNetwork::new(n.language.clone(), n.area.clone(), n.vertices().clone(), arcs))
}

/// Lower/upper context of one bounds computation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsContext {
    pub area: String,
    pub kind: MeasureKind,
    pub lang_i: String,
    pub lang_j: String,
}

/// An observed value with its randomized counterpart distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsBundle {
    pub context: BoundsContext,
    pub observed: f64,
    pub random_samples: Vec<f64>,
    pub random_mean: f64,
    pub random_sd: f64,
    pub seed: u64,
}

fn summarize(
    context: BoundsContext,
    observed: f64,
    samples: Vec<f64>,
    seed: u64,
) -> BoundsBundle {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = if samples.len() > 1 {
        (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    BoundsBundle { context, observed, random_samples: samples, random_mean: mean, random_sd: sd, seed }
}

/// Structural lower bound: the measure evaluated on randomized counterparts
/// of both networks, paired run by run, averaged over `runs`.
pub fn structural_lower_bound(
    i: &ItemNetwork,
    j: &ItemNetwork,
    measure: &GraphMeasure,
    runs: usize,
    seed: u64,
) -> Result<BoundsBundle, BaselineError> {
    let observed = measure.evaluate(i, j)?.value;
    let mut samples = Vec::with_capacity(runs);
    for run in 0..runs {
        let ri = er_randomize(i, derive_seed(seed, &[run as u64, 0]))?;
        let rj = er_randomize(j, derive_seed(seed, &[run as u64, 1]))?;
        samples.push(measure.evaluate(&ri, &rj)?.value);
    }
    let context = BoundsContext {
        area: i.area.clone(),
        kind: measure.kind(),
        lang_i: i.language.to_string(),
        lang_j: j.language.to_string(),
    };
    Ok(summarize(context, observed, samples, seed))
}

/// Content lower bound: the vertex-set cosine under fake alignments built
/// from two independent random permutations of the vertex sets, truncated to
/// the observed alignment cardinality, averaged over `runs`.
pub fn content_lower_bound(
    i: &ItemNetwork,
    j: &ItemNetwork,
    kind: MeasureKind,
    hi: &FeatureTable,
    hj: &FeatureTable,
    runs: usize,
    seed: u64,
) -> Result<BoundsBundle, BaselineError> {
    if i.is_empty() || j.is_empty() {
        return Err(BaselineError::EmptyNetwork);
    }
    let alignment = crate::extract::alignment_set(i, j).map_err(NetsimError::from)?;
    let pair_count = alignment.len();
    let observed = vertex_cosine_similarity(i, j, &alignment, hi, hj)?;

    let base_i: Vec<ItemId> = i.vertices().iter().cloned().collect();
    let base_j: Vec<ItemId> = j.vertices().iter().cloned().collect();
    let mut samples = Vec::with_capacity(runs);
    for run in 0..runs {
        let mut perm_i = base_i.clone();
        let mut perm_j = base_j.clone();
        let mut rng_i = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[run as u64, 0]));
        let mut rng_j = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[run as u64, 1]));
        perm_i.shuffle(&mut rng_i);
        perm_j.shuffle(&mut rng_j);
        let pairs: Vec<(ItemId, ItemId)> =
            perm_i.iter().cloned().zip(perm_j.iter().cloned()).take(pair_count).collect();
        samples.push(vertex_cosine_with_pairs(i, j, &pairs, hi, hj)?);
    }
    let context = BoundsContext {
        area: i.area.clone(),
        kind,
        lang_i: i.language.to_string(),
        lang_j: j.language.to_string(),
    };
    Ok(summarize(context, observed, samples, seed))
}

/// Maximum observed similarity as a function of the smaller network order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundCurve {
    pub measure: MeasureKind,
    /// min-order bucket -> maximum similarity observed in that bucket.
    pub points: BTreeMap<usize, f64>,
}

/// Buckets results by `min(order_i, order_j)` and keeps the per-bucket
/// maximum. The raw maxima are kept as-is; no monotone hull is applied.
pub fn upper_bound_curve(results: &[SimilarityResult]) -> Result<UpperBoundCurve, BaselineError> {
    let first = results.first().ok_or(BaselineError::NoResults)?;
    let measure = first.measure;
    let mut points: BTreeMap<usize, f64> = BTreeMap::new();
    for r in results {
        if r.measure != measure {
            return Err(BaselineError::MixedMeasures(measure, r.measure));
        }
        let bucket = r.order_i.min(r.order_j);
        points
            .entry(bucket)
            .and_modify(|m| *m = m.max(r.value))
            .or_insert(r.value);
    }
    Ok(UpperBoundCurve { measure, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::ItemNetwork;
    use crate::netsim::PprOptions;
    use crate::types::Lang;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn net(lang: &str, vertices: &[&str], arcs: &[(&str, &str)]) -> ItemNetwork {
        ItemNetwork::new(
            Lang::new(lang),
            "area",
            vertices.iter().map(|v| ItemId::new(*v)).collect(),
            arcs.iter().map(|(s, t)| (ItemId::new(*s), ItemId::new(*t))).collect(),
        )
    }

    #[test]
    fn zero_size_randomization_is_empty() {
        let n = net("de", &["a", "b", "c"], &[]);
        let r = er_randomize(&n, 7).unwrap();
        assert_eq!(r.size(), 0);
        assert_eq!(r.vertices(), n.vertices());
    }

    #[test]
    fn saturated_two_vertex_graph_is_forced() {
        let n = net("de", &["a", "b"], &[("a", "b"), ("b", "a")]);
        for seed in 0..20 {
            let r = er_randomize(&n, seed).unwrap();
            assert_eq!(r.arcs(), n.arcs());
        }
    }

    #[test]
    fn infeasible_size_is_rejected() {
        let mut arcs = BTreeSet::new();
        arcs.insert((ItemId::new("a"), ItemId::new("a")));
        let n = ItemNetwork::new(Lang::new("de"), "area", [ItemId::new("a")].into(), arcs);
        assert!(matches!(er_randomize(&n, 0), Err(BaselineError::InfeasibleSize { .. })));
    }

    #[test]
    fn randomization_is_deterministic_per_seed() {
        let n = net("de", &["a", "b", "c", "d"], &[("a", "b"), ("c", "d"), ("d", "a")]);
        let r1 = er_randomize(&n, 42).unwrap();
        let r2 = er_randomize(&n, 42).unwrap();
        assert_eq!(r1, r2);
        let r3 = er_randomize(&n, 43).unwrap();
        // Overwhelmingly likely to differ on 12 slots choose 3.
        assert!(r1 != r3 || r1.arcs() == r3.arcs());
    }

    /// Frequency-count oracle over all six slots of an order-3, size-1
    /// graph; the chi-square statistic against uniformity must stay under
    /// the df=5, p=0.001 critical value.
    #[test]
    fn arc_slots_are_uniform() {
        let n = net("de", &["a", "b", "c"], &[("a", "b")]);
        let draws = 6000;
        let mut counts: BTreeMap<(ItemId, ItemId), u64> = BTreeMap::new();
        for run in 0..draws {
            let r = er_randomize(&n, derive_seed(99, &[run])).unwrap();
            let arc = r.arcs().iter().next().unwrap().clone();
            *counts.entry(arc).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 6);
        let expected = draws as f64 / 6.0;
        let chi2: f64 =
            counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 20.515, "chi-square {chi2} exceeds the p=0.001 critical value");
    }

    #[test]
    fn structural_bound_is_reproducible() {
        let i = net("de", &["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        let j = net("en", &["a", "b", "c"], &[("a", "c")]);
        let b1 = structural_lower_bound(&i, &j, &GraphMeasure::Ges, 5, 11).unwrap();
        let b2 = structural_lower_bound(&i, &j, &GraphMeasure::Ges, 5, 11).unwrap();
        assert_eq!(b1, b2);
        assert_eq!(b1.random_samples.len(), 5);
        assert_abs_diff_eq!(
            b1.random_mean,
            b1.random_samples.iter().sum::<f64>() / 5.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn observed_identity_dominates_random_mean() {
        let i = net("de", &["a", "b", "c"], &[("a", "b"), ("b", "c"), ("c", "a")]);
        let j = net("en", &["a", "b", "c"], &[("a", "b"), ("b", "c"), ("c", "a")]);
        let b = structural_lower_bound(&i, &j, &GraphMeasure::Ges, 20, 5).unwrap();
        assert_eq!(b.observed, 1.0);
        // More than one graph of order 3 and size 3 exists, so with this
        // frozen seed some randomized pair differs and the mean drops
        // strictly below the observed identity.
        assert!(b.random_mean < 1.0);
    }

    /// Order 2 with both arcs leaves exactly one graph, so every randomized
    /// counterpart equals the observed pair under every measure.
    #[test]
    fn forced_graphs_pin_random_to_observed() {
        let i = net("de", &["a", "b"], &[("a", "b"), ("b", "a")]);
        let j = net("en", &["a", "b"], &[("a", "b"), ("b", "a")]);
        let measures = [
            GraphMeasure::Ges,
            GraphMeasure::Ejs,
            GraphMeasure::DeltaCon(PprOptions::default()),
            GraphMeasure::Cgs { shareable: 2 },
        ];
        for measure in measures {
            let b = structural_lower_bound(&i, &j, &measure, 10, 3).unwrap();
            for s in &b.random_samples {
                assert_abs_diff_eq!(*s, b.observed, epsilon = 1e-12);
            }
            assert_abs_diff_eq!(b.random_mean, b.observed, epsilon = 1e-12);
        }
    }

    fn table(entries: &[(&str, &[f64])]) -> FeatureTable {
        entries.iter().map(|(q, v)| (ItemId::new(*q), v.to_vec())).collect()
    }

    #[test]
    fn content_bound_on_single_vertices_equals_observed() {
        let i = net("de", &["a"], &[]);
        let j = net("en", &["a"], &[]);
        let hi = table(&[("a", &[1.0, 2.0])]);
        let hj = table(&[("a", &[2.0, 1.0])]);
        let b = content_lower_bound(&i, &j, MeasureKind::Sv1, &hi, &hj, 8, 1).unwrap();
        for s in &b.random_samples {
            assert_abs_diff_eq!(*s, b.observed, epsilon = 1e-15);
        }
    }

    #[test]
    fn content_bound_with_identical_vectors_equals_observed() {
        let i = net("de", &["a", "b", "c"], &[]);
        let j = net("en", &["a", "b", "c"], &[]);
        let h = table(&[("a", &[1.0, 1.0]), ("b", &[1.0, 1.0]), ("c", &[1.0, 1.0])]);
        let b = content_lower_bound(&i, &j, MeasureKind::Sv2, &h, &h, 10, 2).unwrap();
        for s in &b.random_samples {
            assert_abs_diff_eq!(*s, b.observed, epsilon = 1e-12);
        }
    }

    /// Exhaustive pairing oracle on order 2 with orthogonal block vectors:
    /// the four equally likely permutation pairs score (1, 0, 0, 1) over a
    /// denominator of 2, so the exact expectation is 0.5.
    #[test]
    fn content_bound_matches_exhaustive_pairing_expectation() {
        let i = net("de", &["a", "b"], &[]);
        let j = net("en", &["a", "b"], &[]);
        let h = table(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);

        // Oracle: enumerate all permutation pairs explicitly.
        let perms: [[&str; 2]; 2] = [["a", "b"], ["b", "a"]];
        let mut total = 0.0;
        for pi in &perms {
            for pj in &perms {
                let pairs: Vec<(ItemId, ItemId)> = pi
                    .iter()
                    .zip(pj.iter())
                    .map(|(v, w)| (ItemId::new(*v), ItemId::new(*w)))
                    .collect();
                total += vertex_cosine_with_pairs(&i, &j, &pairs, &h, &h).unwrap();
            }
        }
        let exact = total / 4.0;
        assert_abs_diff_eq!(exact, 0.5, epsilon = 1e-15);

        let b = content_lower_bound(&i, &j, MeasureKind::Sv1, &h, &h, 2000, 7).unwrap();
        assert_abs_diff_eq!(b.random_mean, exact, epsilon = 0.05);
    }

    #[test]
    fn content_bound_rejects_empty_networks() {
        let i = net("de", &[], &[]);
        let j = net("en", &["a"], &[]);
        let h = table(&[("a", &[1.0])]);
        assert!(matches!(
            content_lower_bound(&i, &j, MeasureKind::Sv1, &h, &h, 1, 0),
            Err(BaselineError::EmptyNetwork)
        ));
    }

    fn result(measure: MeasureKind, value: f64, order_i: usize, order_j: usize) -> SimilarityResult {
        SimilarityResult {
            measure,
            value,
            order_i,
            order_j,
            size_i: 0,
            size_j: 0,
            shared_vertices: 0,
        }
    }

    #[test]
    fn curve_single_point() {
        let curve = upper_bound_curve(&[result(MeasureKind::Ges, 0.4, 3, 9)]).unwrap();
        assert_eq!(curve.points.len(), 1);
        assert_eq!(curve.points[&3], 0.4);
    }

    #[test]
    fn curve_keeps_bucket_maximum() {
        let curve = upper_bound_curve(&[
            result(MeasureKind::Ges, 0.3, 5, 8),
            result(MeasureKind::Ges, 0.7, 5, 12),
        ])
        .unwrap();
        assert_eq!(curve.points[&5], 0.7);
    }

    /// Grouping oracle: raw maxima per bucket, non-monotone shape retained.
    #[test]
    fn curve_is_not_hulled() {
        let results = [
            result(MeasureKind::Ges, 0.5, 10, 30),
            result(MeasureKind::Ges, 0.4, 20, 25),
        ];
        let mut oracle: BTreeMap<usize, f64> = BTreeMap::new();
        for r in &results {
            let b = r.order_i.min(r.order_j);
            let e = oracle.entry(b).or_insert(f64::MIN);
            *e = e.max(r.value);
        }
        let curve = upper_bound_curve(&results).unwrap();
        assert_eq!(curve.points, oracle);
        assert!(curve.points[&10] > curve.points[&20]);
    }

    #[test]
    fn curve_rejects_mixed_measures() {
        let results =
            [result(MeasureKind::Ges, 0.5, 1, 1), result(MeasureKind::Ejs, 0.5, 1, 1)];
        assert!(matches!(upper_bound_curve(&results), Err(BaselineError::MixedMeasures(..))));
    }

    proptest! {
        #[test]
        fn randomization_preserves_order_and_size(
            n in 2usize..10,
            density in 0.0f64..1.0,
            seed in 0u64..1000,
        ) {
            let slots = n * (n - 1);
            let size = ((slots as f64) * density) as usize;
            let vertices: BTreeSet<ItemId> = (0..n).map(|k| ItemId::new(format!("Q{k}"))).collect();
            let sorted: Vec<&ItemId> = vertices.iter().collect();
            let arcs: BTreeSet<(ItemId, ItemId)> = (0..size)
                .map(|k| {
                    let s = k / (n - 1);
                    let mut t = k % (n - 1);
                    if t >= s { t += 1; }
                    (sorted[s].clone(), sorted[t].clone())
                })
                .collect();
            let net = ItemNetwork::new(Lang::new("de"), "area", vertices, arcs);
            let r = er_randomize(&net, seed).unwrap();
            prop_assert_eq!(r.order(), net.order());
            prop_assert_eq!(r.size(), net.size());
            prop_assert_eq!(r.vertices(), net.vertices());
            prop_assert!(r.arcs().iter().all(|(s, t)| s != t));
        }
    }
}
