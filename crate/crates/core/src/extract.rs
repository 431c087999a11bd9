//! Subject-area extraction: hierarchy expansion over the knowledge graph,
//! studies-target harvesting, member resolution, item-network induction and
//! vertex alignment.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Corpus, KnowledgeGraph};
use crate::types::{ArcLabel, ItemId, Lang};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("unknown item {0}")]
    UnknownItem(ItemId),
    #[error("unknown language {0}")]
    UnknownLanguage(Lang),
    #[error("subject-area mismatch: {left} vs {right}")]
    AreaMismatch { left: String, right: String },
}

/// A subject area: a seed item plus its direct instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectArea {
    pub id: String,
    pub seed: ItemId,
    pub members: BTreeSet<ItemId>,
}

impl SubjectArea {
    pub fn member_count(&self) -> usize {
        self.members.len()
    }
}

/// One language's directed article graph restricted to a subject area,
/// with vertices keyed by item id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemNetwork {
    pub language: Lang,
    pub area: String,
    vertices: BTreeSet<ItemId>,
    arcs: BTreeSet<(ItemId, ItemId)>,
}

impl ItemNetwork {
    /// Builds a network from explicit parts. Arcs with an endpoint outside
    /// the vertex set are rejected by `debug_assert`; callers own that
    /// contract.
    pub fn new(
        language: Lang,
        area: impl Into<String>,
        vertices: BTreeSet<ItemId>,
        arcs: BTreeSet<(ItemId, ItemId)>,
    ) -> Self {
        debug_assert!(
            arcs.iter().all(|(s, t)| vertices.contains(s) && vertices.contains(t)),
            "arc endpoints must be vertices"
        );
        ItemNetwork { language, area: area.into(), vertices, arcs }
    }

    pub fn empty(language: Lang, area: impl Into<String>) -> Self {
        ItemNetwork {
            language,
            area: area.into(),
            vertices: BTreeSet::new(),
            arcs: BTreeSet::new(),
        }
    }

    pub fn vertices(&self) -> &BTreeSet<ItemId> {
        &self.vertices
    }

    pub fn arcs(&self) -> &BTreeSet<(ItemId, ItemId)> {
        &self.arcs
    }

    /// Number of vertices.
    pub fn order(&self) -> usize {
        self.vertices.len()
    }

    /// Number of arcs.
    pub fn size(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// The subgraph induced by `keep`.
    pub fn induced(&self, keep: &BTreeSet<ItemId>) -> Self {
        let vertices: BTreeSet<ItemId> = self.vertices.intersection(keep).cloned().collect();
        let arcs = self
            .arcs
            .iter()
            .filter(|(s, t)| vertices.contains(s) && vertices.contains(t))
            .cloned()
            .collect();
        ItemNetwork { language: self.language.clone(), area: self.area.clone(), vertices, arcs }
    }
}

/// Vertex pairs of two item networks that denote the same item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentSet {
    pub pairs: BTreeSet<(ItemId, ItemId)>,
}

impl AlignmentSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn inverse(&self) -> Self {
        AlignmentSet { pairs: self.pairs.iter().map(|(v, w)| (w.clone(), v.clone())).collect() }
    }
}

/// All items reachable from `root` by descending the subclass hierarchy,
/// plus the root itself.
///
/// Subclass triples are stored child-to-superclass, so descending means
/// walking those arcs in reverse.
pub fn expand_a_hierarchy(
    g: &KnowledgeGraph,
    root: &ItemId,
) -> Result<BTreeSet<ItemId>, ExtractError> {
    if !g.contains_item(root) {
        return Err(ExtractError::UnknownItem(root.clone()));
    }
    let mut seen: BTreeSet<ItemId> = BTreeSet::new();
    seen.insert(root.clone());
    let mut frontier = vec![root.clone()];
    while let Some(current) = frontier.pop() {
        for child in g.sources(ArcLabel::SubclassOf, &current) {
            if seen.insert(child.clone()) {
                frontier.push(child.clone());
            }
        }
    }
    Ok(seen)
}

/// Items that are `studies`-targets of any member of `a_set`.
pub fn collect_studies_targets(g: &KnowledgeGraph, a_set: &BTreeSet<ItemId>) -> BTreeSet<ItemId> {
    let mut targets = BTreeSet::new();
    for v in a_set {
        targets.extend(g.targets(v, ArcLabel::Studies).cloned());
    }
    targets
}

/// Candidate subject-area seeds for a set of hierarchy roots: for each root,
/// the studies-targets of its expanded hierarchy, deduplicated across roots.
pub fn enumerate_candidate_areas(
    g: &KnowledgeGraph,
    roots: &BTreeSet<ItemId>,
) -> Result<BTreeSet<ItemId>, ExtractError> {
    let mut seeds = BTreeSet::new();
    for root in roots {
        let hierarchy = expand_a_hierarchy(g, root)?;
        seeds.extend(collect_studies_targets(g, &hierarchy));
    }
    Ok(seeds)
}

/// Resolves a seed into a subject area via its direct instances.
pub fn resolve_members(g: &KnowledgeGraph, seed: &ItemId) -> Result<SubjectArea, ExtractError> {
    resolve_members_labeled(g, seed, seed.as_str())
}

/// Like [`resolve_members`], with an explicit human-readable label.
pub fn resolve_members_labeled(
    g: &KnowledgeGraph,
    seed: &ItemId,
    label: &str,
) -> Result<SubjectArea, ExtractError> {
    if !g.contains_item(seed) {
        return Err(ExtractError::UnknownItem(seed.clone()));
    }
    let members = g.sources(ArcLabel::InstanceOf, seed).cloned().collect();
    Ok(SubjectArea { id: label.to_owned(), seed: seed.clone(), members })
}

/// Induces one language's item network for a subject area: article vertices
/// whose item is an area member, arcs relabeled from titles to item ids.
pub fn induce_item_network(
    corpus: &Corpus,
    lang: &Lang,
    area: &SubjectArea,
) -> Result<ItemNetwork, ExtractError> {
    let slice = corpus.language(lang).ok_or_else(|| ExtractError::UnknownLanguage(lang.clone()))?;
    let mut vertices = BTreeSet::new();
    for record in slice.articles.values() {
        if area.members.contains(&record.item) {
            vertices.insert(record.item.clone());
        }
    }
    let mut arcs = BTreeSet::new();
    for (src_title, dst_title) in &slice.arcs {
        let src = &slice.articles[src_title].item;
        let dst = &slice.articles[dst_title].item;
        if vertices.contains(src) && vertices.contains(dst) {
            arcs.insert((src.clone(), dst.clone()));
        }
    }
    Ok(ItemNetwork { language: lang.clone(), area: area.id.clone(), vertices, arcs })
}

/// Aligned vertex pairs of two networks over the same subject area: item-id
/// identity on the vertex intersection.
pub fn alignment_set(i: &ItemNetwork, j: &ItemNetwork) -> Result<AlignmentSet, ExtractError> {
    check_same_area(i, j)?;
    let pairs = i.vertices.intersection(&j.vertices).map(|q| (q.clone(), q.clone())).collect();
    Ok(AlignmentSet { pairs })
}

pub(crate) fn check_same_area(i: &ItemNetwork, j: &ItemNetwork) -> Result<(), ExtractError> {
    if i.area != j.area {
        return Err(ExtractError::AreaMismatch { left: i.area.clone(), right: j.area.clone() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::{BTreeMap, VecDeque};
    use std::io::{BufReader, Cursor};

    fn graph(triples: &[(&str, ArcLabel, &str)]) -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new();
        for (s, l, t) in triples {
            g.insert_arc(ItemId::new(*s), *l, ItemId::new(*t));
        }
        g
    }

    fn ids(names: &[&str]) -> BTreeSet<ItemId> {
        names.iter().map(|n| ItemId::new(*n)).collect()
    }

    /// Independent BFS over explicitly inverted subclass arcs.
    fn bfs_oracle(g: &KnowledgeGraph, root: &ItemId) -> BTreeSet<ItemId> {
        let mut down: BTreeMap<ItemId, Vec<ItemId>> = BTreeMap::new();
        for (s, l, t) in g.arcs() {
            if *l == ArcLabel::SubclassOf {
                down.entry(t.clone()).or_default().push(s.clone());
            }
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(root.clone());
        queue.push_back(root.clone());
        while let Some(v) = queue.pop_front() {
            for w in down.get(&v).into_iter().flatten() {
                if seen.insert(w.clone()) {
                    queue.push_back(w.clone());
                }
            }
        }
        seen
    }

    #[test]
    fn chain_expansion_descends_inverted_arcs() {
        // Stored as (Q3 sco Q2), (Q2 sco Q1); descending from Q1 must reach all.
        let g = graph(&[
            ("Q3", ArcLabel::SubclassOf, "Q2"),
            ("Q2", ArcLabel::SubclassOf, "Q1"),
        ]);
        let root = ItemId::new("Q1");
        let expanded = expand_a_hierarchy(&g, &root).unwrap();
        assert_eq!(expanded, bfs_oracle(&g, &root));
        assert_eq!(expanded, ids(&["Q1", "Q2", "Q3"]));
    }

    #[test]
    fn leaf_expansion_is_singleton() {
        let g = graph(&[("Q2", ArcLabel::SubclassOf, "Q1")]);
        let root = ItemId::new("Q2");
        assert_eq!(expand_a_hierarchy(&g, &root).unwrap(), ids(&["Q2"]));
    }

    #[test]
    fn diamond_visits_each_item_once() {
        let g = graph(&[
            ("Q2", ArcLabel::SubclassOf, "Q1"),
            ("Q3", ArcLabel::SubclassOf, "Q1"),
            ("Q4", ArcLabel::SubclassOf, "Q2"),
            ("Q4", ArcLabel::SubclassOf, "Q3"),
        ]);
        let root = ItemId::new("Q1");
        let expanded = expand_a_hierarchy(&g, &root).unwrap();
        assert_eq!(expanded, bfs_oracle(&g, &root));
        assert_eq!(expanded, ids(&["Q1", "Q2", "Q3", "Q4"]));
    }

    #[test]
    fn unknown_root_is_an_error() {
        let g = graph(&[("Q2", ArcLabel::SubclassOf, "Q1")]);
        assert!(matches!(
            expand_a_hierarchy(&g, &ItemId::new("Q99")),
            Err(ExtractError::UnknownItem(_))
        ));
    }

    #[test]
    fn studies_targets_single() {
        let g = graph(&[("Q1", ArcLabel::Studies, "Q9")]);
        assert_eq!(collect_studies_targets(&g, &ids(&["Q1"])), ids(&["Q9"]));
    }

    #[test]
    fn studies_targets_none() {
        let g = graph(&[("Q2", ArcLabel::SubclassOf, "Q1")]);
        assert!(collect_studies_targets(&g, &ids(&["Q1"])).is_empty());
    }

    #[test]
    fn studies_targets_union() {
        let g = graph(&[
            ("Q1", ArcLabel::Studies, "Q9"),
            ("Q2", ArcLabel::Studies, "Q9"),
            ("Q2", ArcLabel::Studies, "Q8"),
        ]);
        // Oracle: plain set union of per-item target sets.
        let mut union = BTreeSet::new();
        for v in ["Q1", "Q2"] {
            union.extend(g.targets(&ItemId::new(v), ArcLabel::Studies).cloned());
        }
        let got = collect_studies_targets(&g, &ids(&["Q1", "Q2"]));
        assert_eq!(got, union);
        assert_eq!(got, ids(&["Q8", "Q9"]));
    }

    #[test]
    fn candidate_areas_one_root_two_targets() {
        let g = graph(&[
            ("Q1", ArcLabel::Studies, "Q9"),
            ("Q1", ArcLabel::Studies, "Q8"),
        ]);
        let seeds = enumerate_candidate_areas(&g, &ids(&["Q1"])).unwrap();
        assert_eq!(seeds.len(), 2);
    }

    #[test]
    fn candidate_areas_deduplicate_across_roots() {
        let g = graph(&[
            ("Q1", ArcLabel::Studies, "Q9"),
            ("Q2", ArcLabel::Studies, "Q9"),
            ("Q2", ArcLabel::Studies, "Q8"),
        ]);
        let seeds = enumerate_candidate_areas(&g, &ids(&["Q1", "Q2"])).unwrap();
        assert_eq!(seeds, ids(&["Q8", "Q9"]));
    }

    #[test]
    fn members_are_direct_instances() {
        let g = graph(&[
            ("Q10", ArcLabel::InstanceOf, "Q3305213"),
            ("Q11", ArcLabel::InstanceOf, "Q3305213"),
            ("Q12", ArcLabel::InstanceOf, "Q3305213"),
            // An indirect instance must not count.
            ("Q13", ArcLabel::InstanceOf, "Q10"),
        ]);
        let area = resolve_members(&g, &ItemId::new("Q3305213")).unwrap();
        assert_eq!(area.members, ids(&["Q10", "Q11", "Q12"]));
        assert_eq!(area.id, "Q3305213");
    }

    #[test]
    fn seed_without_instances_yields_empty_area() {
        let g = graph(&[("Q2", ArcLabel::SubclassOf, "Q1")]);
        let area = resolve_members(&g, &ItemId::new("Q1")).unwrap();
        assert!(area.members.is_empty());
    }

    #[test]
    fn member_may_belong_to_two_areas() {
        let g = graph(&[
            ("Q10", ArcLabel::InstanceOf, "Q1"),
            ("Q10", ArcLabel::InstanceOf, "Q2"),
        ]);
        let a = resolve_members(&g, &ItemId::new("Q1")).unwrap();
        let b = resolve_members(&g, &ItemId::new("Q2")).unwrap();
        assert!(a.members.contains(&ItemId::new("Q10")));
        assert!(b.members.contains(&ItemId::new("Q10")));
    }

    fn tiny_corpus() -> Corpus {
        // de: A(Q1) -> B(Q2), A(Q1) -> C(Q7)
        let lines = [
            ("de", "A", "Q1", vec!["B", "C"]),
            ("de", "B", "Q2", vec![]),
            ("de", "C", "Q7", vec![]),
        ];
        let text: String = lines
            .iter()
            .map(|(lang, title, qid, links)| {
                format!(
                    "{{\"lang\":\"{lang}\",\"title\":\"{title}\",\"qid\":\"{qid}\",\"outlinks\":{},\"structure\":{},\"sentences\":[[\"w\"]]}}\n",
                    serde_json::to_string(links).unwrap(),
                    serde_json::to_string(&crate::features::StructureCounts::default()).unwrap(),
                )
            })
            .collect();
        let langs: BTreeSet<Lang> = [Lang::new("de")].into_iter().collect();
        crate::ingest::parse_corpus_reader(BufReader::new(Cursor::new(text.into_bytes())), &langs)
            .unwrap()
            .0
    }

    fn area(members: &[&str]) -> SubjectArea {
        SubjectArea { id: "area".into(), seed: ItemId::new("Q0"), members: ids(members) }
    }

    #[test]
    fn induction_keeps_member_endpoints_only() {
        let corpus = tiny_corpus();
        let net =
            induce_item_network(&corpus, &Lang::new("de"), &area(&["Q1", "Q2"])).unwrap();
        assert_eq!(net.vertices(), &ids(&["Q1", "Q2"]));
        assert_eq!(net.arcs().len(), 1);
        assert!(net.arcs().contains(&(ItemId::new("Q1"), ItemId::new("Q2"))));
    }

    #[test]
    fn induction_drops_arc_to_non_member() {
        let corpus = tiny_corpus();
        let net = induce_item_network(&corpus, &Lang::new("de"), &area(&["Q1"])).unwrap();
        assert_eq!(net.vertices(), &ids(&["Q1"]));
        assert!(net.arcs().is_empty());
    }

    #[test]
    fn induction_handles_zero_matches() {
        let corpus = tiny_corpus();
        let net = induce_item_network(&corpus, &Lang::new("de"), &area(&["Q99"])).unwrap();
        assert_eq!(net.order(), 0);
        assert_eq!(net.size(), 0);
    }

    #[test]
    fn unknown_language_is_an_error() {
        let corpus = tiny_corpus();
        assert!(matches!(
            induce_item_network(&corpus, &Lang::new("fr"), &area(&["Q1"])),
            Err(ExtractError::UnknownLanguage(_))
        ));
    }

    fn net(lang: &str, vertices: &[&str], arcs: &[(&str, &str)]) -> ItemNetwork {
        ItemNetwork::new(
            Lang::new(lang),
            "area",
            ids(vertices),
            arcs.iter().map(|(s, t)| (ItemId::new(*s), ItemId::new(*t))).collect(),
        )
    }

    #[test]
    fn alignment_of_identical_sets() {
        let i = net("de", &["Q1", "Q2", "Q3", "Q4", "Q5"], &[]);
        let j = net("en", &["Q1", "Q2", "Q3", "Q4", "Q5"], &[]);
        assert_eq!(alignment_set(&i, &j).unwrap().len(), 5);
    }

    #[test]
    fn alignment_of_disjoint_sets_is_empty() {
        let i = net("de", &["Q1"], &[]);
        let j = net("en", &["Q2"], &[]);
        assert!(alignment_set(&i, &j).unwrap().is_empty());
    }

    #[test]
    fn alignment_is_the_intersection() {
        let i = net("de", &["Q1", "Q2", "Q3"], &[]);
        let j = net("en", &["Q2", "Q3", "Q4"], &[]);
        let al = alignment_set(&i, &j).unwrap();
        let expected: BTreeSet<_> =
            [("Q2", "Q2"), ("Q3", "Q3")].map(|(a, b)| (ItemId::new(a), ItemId::new(b))).into();
        assert_eq!(al.pairs, expected);
    }

    #[test]
    fn alignment_rejects_area_mismatch() {
        let i = net("de", &["Q1"], &[]);
        let mut j = net("en", &["Q1"], &[]);
        j.area = "other".into();
        assert!(matches!(alignment_set(&i, &j), Err(ExtractError::AreaMismatch { .. })));
    }

    #[test]
    fn alignment_inverse_symmetry() {
        let i = net("de", &["Q1", "Q2", "Q3"], &[]);
        let j = net("en", &["Q2", "Q3", "Q4"], &[]);
        let ij = alignment_set(&i, &j).unwrap();
        let ji = alignment_set(&j, &i).unwrap();
        assert_eq!(ij.len(), ji.len());
        assert_eq!(ij.inverse(), ji);
    }

    proptest! {
        #[test]
        fn expansion_contains_root_and_matches_bfs(
            arcs in proptest::collection::vec((0usize..10, 0usize..10), 0..25),
            root in 0usize..10,
        ) {
            let mut g = KnowledgeGraph::new();
            for i in 0..10 {
                g.insert_item(ItemId::new(format!("Q{i}")));
            }
            for (s, t) in arcs {
                g.insert_arc(ItemId::new(format!("Q{s}")), ArcLabel::SubclassOf, ItemId::new(format!("Q{t}")));
            }
            let root = ItemId::new(format!("Q{root}"));
            let expanded = expand_a_hierarchy(&g, &root).unwrap();
            prop_assert!(expanded.contains(&root));
            prop_assert_eq!(expanded, bfs_oracle(&g, &root));
        }

        #[test]
        fn studies_targets_monotone_in_a_set(
            arcs in proptest::collection::vec((0usize..8, 0usize..8), 0..20),
            subset in proptest::collection::btree_set(0usize..8, 0..4),
            extra in proptest::collection::btree_set(0usize..8, 0..4),
        ) {
            let mut g = KnowledgeGraph::new();
            for i in 0..8 {
                g.insert_item(ItemId::new(format!("Q{i}")));
            }
            for (s, t) in arcs {
                g.insert_arc(ItemId::new(format!("Q{s}")), ArcLabel::Studies, ItemId::new(format!("Q{t}")));
            }
            let small: BTreeSet<ItemId> = subset.iter().map(|i| ItemId::new(format!("Q{i}"))).collect();
            let mut large = small.clone();
            large.extend(extra.iter().map(|i| ItemId::new(format!("Q{i}"))));
            let b_small = collect_studies_targets(&g, &small);
            let b_large = collect_studies_targets(&g, &large);
            prop_assert!(b_small.is_subset(&b_large));
        }
    }
}
