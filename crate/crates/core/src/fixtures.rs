//! Deterministic generator of miniature corpora (knowledge graph plus
//! multi-language articles) with controllable cross-language overlap, so
//! every measure and bound can be exercised end to end. Alongside the two
//! JSONL files it emits an expectations file holding the analytically
//! forced similarity values of the requested regime.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::derive_seed;
use crate::features::StructureCounts;
use crate::ingest::{article_to_jsonl, ArticleRecord, KnowledgeGraph};
use crate::types::{ArcLabel, ItemId, Lang, MeasureKind};

/// How the covered member window of each language is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoverageLayout {
    /// Every language covers the same leading window of members.
    Shared,
    /// Language `l` covers the `l`-th consecutive window; windows never
    /// overlap, so vertex sets are pairwise disjoint.
    Staggered,
}

/// How article vectors relate across languages for one view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VectorRegime {
    Identical,
    Proportional,
    Orthogonal,
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub languages: usize,
    pub areas: usize,
    pub members_per_area: usize,
    /// Fraction of each area's members covered per language.
    pub coverage: f64,
    /// Fraction of the covered members' ordered pairs linked by arcs.
    pub arc_density: f64,
    pub layout: CoverageLayout,
    pub sv1: VectorRegime,
    pub sv2: VectorRegime,
    pub sv3: VectorRegime,
    pub seed: u64,
}

impl FixtureSpec {
    /// Full coverage, identical structure and vectors: every measure is 1.
    pub fn twins(languages: usize, areas: usize, members_per_area: usize, seed: u64) -> Self {
        FixtureSpec {
            languages,
            areas,
            members_per_area,
            coverage: 1.0,
            arc_density: 0.3,
            layout: CoverageLayout::Shared,
            sv1: VectorRegime::Identical,
            sv2: VectorRegime::Identical,
            sv3: VectorRegime::Identical,
            seed,
        }
    }

    /// Pairwise disjoint coverage: every structural measure is 0.
    pub fn strangers(languages: usize, areas: usize, members_per_area: usize, seed: u64) -> Self {
        FixtureSpec {
            coverage: 1.0 / languages as f64,
            layout: CoverageLayout::Staggered,
            ..FixtureSpec::twins(languages, areas, members_per_area, seed)
        }
    }

    /// Identical structure on the shared half of the members: CGS equals
    /// the coverage fraction while the intersection-based measures stay 1.
    pub fn half_twins(languages: usize, areas: usize, members_per_area: usize, seed: u64) -> Self {
        FixtureSpec { coverage: 0.5, ..FixtureSpec::twins(languages, areas, members_per_area, seed) }
    }

    /// Number of members each language covers per area.
    pub fn covered_count(&self) -> usize {
        ((self.coverage * self.members_per_area as f64).ceil() as usize)
            .min(self.members_per_area)
    }

    fn window(&self, lang_idx: usize) -> (usize, usize) {
        let len = self.covered_count();
        match self.layout {
            CoverageLayout::Shared => (0, len),
            CoverageLayout::Staggered => {
                let start = (lang_idx * len).min(self.members_per_area);
                let end = (start + len).min(self.members_per_area);
                (start, end - start)
            }
        }
    }
}

/// A single analytically forced similarity value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedCase {
    pub area: String,
    pub lang_i: String,
    pub lang_j: String,
    pub measure: MeasureKind,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Expectations {
    pub spec: FixtureSpec,
    pub languages: Vec<String>,
    pub oecd_roots: Vec<String>,
    pub area_seeds: Vec<String>,
    pub cases: Vec<ExpectedCase>,
}

#[derive(Debug, Clone)]
pub struct FixtureFiles {
    pub items: PathBuf,
    pub articles: PathBuf,
    pub expected: PathBuf,
}

const LANG_CODES: [&str; 35] = [
    "de", "en", "fr", "es", "it", "nl", "pl", "pt", "ru", "sv", "uk", "cs", "da", "fi", "hu",
    "no", "ro", "tr", "el", "bg", "ca", "sk", "hr", "lt", "lv", "et", "sl", "sr", "he", "id",
    "vi", "ko", "ja", "zh", "ar",
];

const VOCAB: [&str; 30] = [
    "w00", "w01", "w02", "w03", "w04", "w05", "w06", "w07", "w08", "w09", "w10", "w11", "w12",
    "w13", "w14", "w15", "w16", "w17", "w18", "w19", "w20", "w21", "w22", "w23", "w24", "w25",
    "w26", "extraordinarily", "unquestionably", "representation",
];

// Seed-stream tags so the independent draws never collide.
const TAG_ARCS: u64 = 1;
const TAG_SV1: u64 = 2;
const TAG_SV2: u64 = 3;
const TAG_TEXT: u64 = 4;

pub fn language_code(idx: usize) -> String {
    let base = LANG_CODES[idx % LANG_CODES.len()];
    if idx < LANG_CODES.len() {
        base.to_owned()
    } else {
        format!("{base}{}", idx / LANG_CODES.len())
    }
}

fn area_seed_id(area: usize) -> ItemId {
    ItemId::new(format!("Q{}", 100 + area))
}

fn member_id(area: usize, member: usize) -> ItemId {
    ItemId::new(format!("Q{}", 1000 + 1000 * area + member))
}

/// Generates the fixture into `dir` as `items.jsonl`, `articles.jsonl` and
/// `expected.json`.
pub fn generate(spec: &FixtureSpec, dir: &Path) -> std::io::Result<FixtureFiles> {
    fs::create_dir_all(dir)?;
    let files = FixtureFiles {
        items: dir.join("items.jsonl"),
        articles: dir.join("articles.jsonl"),
        expected: dir.join("expected.json"),
    };

    let graph = build_graph(spec);
    let mut items_out = fs::File::create(&files.items)?;
    graph.write_jsonl(&mut items_out)?;

    let mut articles_out = fs::File::create(&files.articles)?;
    for record in build_articles(spec) {
        writeln!(articles_out, "{}", article_to_jsonl(&record))?;
    }

    let expected = expectations(spec);
    let mut expected_out = fs::File::create(&files.expected)?;
    serde_json::to_writer_pretty(&mut expected_out, &expected)?;
    expected_out.write_all(b"\n")?;
    Ok(files)
}

fn build_graph(spec: &FixtureSpec) -> KnowledgeGraph {
    let mut g = KnowledgeGraph::new();
    let root = ItemId::new("Q1");
    let branch = ItemId::new("Q2");
    g.insert_item(root.clone());
    g.insert_arc(branch.clone(), ArcLabel::SubclassOf, root.clone());
    for area in 0..spec.areas {
        let seed = area_seed_id(area);
        // Odd areas hang off the subclass branch so that reaching them
        // requires hierarchy expansion.
        let studied_by = if area % 2 == 0 { &root } else { &branch };
        g.insert_arc(studied_by.clone(), ArcLabel::Studies, seed.clone());
        for member in 0..spec.members_per_area {
            g.insert_arc(member_id(area, member), ArcLabel::InstanceOf, seed.clone());
        }
    }
    g
}

/// The member-level arc set of one area for a coverage window, as local
/// indices into the window. Identical windows yield identical arcs.
fn window_arcs(spec: &FixtureSpec, area: usize, start: usize, len: usize) -> Vec<(usize, usize)> {
    let slots = len * len.saturating_sub(1);
    if slots == 0 || spec.arc_density <= 0.0 {
        return Vec::new();
    }
    let count = (((slots as f64) * spec.arc_density).round() as usize).clamp(1, slots);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        spec.seed,
        &[TAG_ARCS, area as u64, start as u64, len as u64],
    ));
    rand::seq::index::sample(&mut rng, slots, count)
        .iter()
        .map(|k| {
            let s = k / (len - 1);
            let mut t = k % (len - 1);
            if t >= s {
                t += 1;
            }
            (s, t)
        })
        .collect()
}

fn base_structure(spec: &FixtureSpec, area: usize, member: usize) -> StructureCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        spec.seed,
        &[TAG_SV1, area as u64, member as u64],
    ));
    let toc_depth = rng.random_range(0..4u64);
    StructureCounts {
        characters: rng.random_range(200..2000),
        sections: rng.random_range(1..8),
        toc_breadth: if toc_depth == 0 { 0 } else { rng.random_range(1..6) },
        toc_depth,
        internal_links: rng.random_range(0..30),
        external_links: rng.random_range(0..10),
        pictures: rng.random_range(0..6),
        tables: rng.random_range(0..3),
        authority_links: rng.random_range(0..2),
        references: rng.random_range(0..20),
        categories: rng.random_range(1..8),
    }
}

fn scale_structure(s: &StructureCounts, factor: u64) -> StructureCounts {
    StructureCounts {
        characters: s.characters * factor,
        sections: s.sections * factor,
        toc_breadth: s.toc_breadth * factor,
        toc_depth: s.toc_depth * factor,
        internal_links: s.internal_links * factor,
        external_links: s.external_links * factor,
        pictures: s.pictures * factor,
        tables: s.tables * factor,
        authority_links: s.authority_links * factor,
        references: s.references * factor,
        categories: s.categories * factor,
    }
}

/// One-hot structure over the nine dimensions without the table-of-contents
/// pair, whose invariant forbids independent values.
fn one_hot_structure(slot: usize) -> StructureCounts {
    let mut s = StructureCounts::default();
    match slot % 9 {
        0 => s.characters = 1,
        1 => s.sections = 1,
        2 => s.internal_links = 1,
        3 => s.external_links = 1,
        4 => s.pictures = 1,
        5 => s.tables = 1,
        6 => s.authority_links = 1,
        7 => s.references = 1,
        _ => s.categories = 1,
    }
    s
}

fn structure_for(spec: &FixtureSpec, lang_idx: usize, area: usize, member: usize) -> StructureCounts {
    match spec.sv1 {
        VectorRegime::Identical => base_structure(spec, area, member),
        VectorRegime::Proportional => {
            scale_structure(&base_structure(spec, area, member), lang_idx as u64 + 1)
        }
        VectorRegime::Orthogonal => one_hot_structure(member + lang_idx),
        VectorRegime::Random => {
            let mut shifted = spec.clone();
            shifted.seed = derive_seed(spec.seed, &[TAG_SV1, 999, lang_idx as u64]);
            base_structure(&shifted, area, member)
        }
    }
}

fn base_topics(spec: &FixtureSpec, area: usize, member: usize, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        spec.seed,
        &[TAG_SV2, area as u64, member as u64, stream],
    ));
    (0..crate::ingest::TOPIC_DIMS).map(|_| rng.random_range(0.0..=1.0)).collect()
}

fn topics_for(spec: &FixtureSpec, lang_idx: usize, area: usize, member: usize) -> Vec<f64> {
    match spec.sv2 {
        VectorRegime::Identical => base_topics(spec, area, member, 0),
        VectorRegime::Proportional => base_topics(spec, area, member, 0)
            .into_iter()
            .map(|v| v / (lang_idx + 1) as f64)
            .collect(),
        VectorRegime::Orthogonal => {
            let mut v = vec![0.0; crate::ingest::TOPIC_DIMS];
            v[(member * spec.languages + lang_idx) % crate::ingest::TOPIC_DIMS] = 1.0;
            v
        }
        VectorRegime::Random => base_topics(spec, area, member, 1 + lang_idx as u64),
    }
}

fn base_text(
    spec: &FixtureSpec,
    area: usize,
    member: usize,
    stream: u64,
) -> (Vec<Vec<String>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        spec.seed,
        &[TAG_TEXT, area as u64, member as u64, stream],
    ));
    let sentence_count = rng.random_range(2..=4);
    let sentences = (0..sentence_count)
        .map(|_| {
            let len = rng.random_range(4..=8);
            (0..len)
                .map(|_| {
                    // Skewed draw for a Zipf-ish frequency profile.
                    let a = rng.random_range(0..VOCAB.len());
                    let b = rng.random_range(0..VOCAB.len());
                    VOCAB[a.min(b)].to_owned()
                })
                .collect()
        })
        .collect();
    let assoc = (0..12).map(|_| rng.random_range(0.05..=0.95)).collect();
    (sentences, assoc)
}

fn text_for(
    spec: &FixtureSpec,
    lang_idx: usize,
    area: usize,
    member: usize,
) -> (Vec<Vec<String>>, Vec<f64>) {
    match spec.sv3 {
        VectorRegime::Identical => base_text(spec, area, member, 0),
        VectorRegime::Proportional => {
            let (sentences, assoc) = base_text(spec, area, member, 0);
            let reps = lang_idx + 1;
            let repeated =
                sentences.iter().cycle().take(sentences.len() * reps).cloned().collect();
            let assoc_repeated = assoc.iter().cycle().take(assoc.len() * reps).copied().collect();
            (repeated, assoc_repeated)
        }
        VectorRegime::Orthogonal => {
            let (sentences, assoc) = base_text(spec, area, member, 0);
            let code = language_code(lang_idx);
            let prefixed = sentences
                .into_iter()
                .map(|s| s.into_iter().map(|t| format!("{code}_{t}")).collect())
                .collect();
            (prefixed, assoc)
        }
        VectorRegime::Random => base_text(spec, area, member, 1 + lang_idx as u64),
    }
}

fn build_articles(spec: &FixtureSpec) -> Vec<ArticleRecord> {
    let mut records = Vec::new();
    for lang_idx in 0..spec.languages {
        let code = language_code(lang_idx);
        let lang = Lang::new(code.clone());
        for area in 0..spec.areas {
            let (start, len) = spec.window(lang_idx);
            let covered: Vec<usize> = (start..start + len).collect();
            let arcs = window_arcs(spec, area, start, len);
            let title_of = |m: usize| format!("{code}:{}", member_id(area, m).as_str());
            for (local, &member) in covered.iter().enumerate() {
                let outlinks = arcs
                    .iter()
                    .filter(|(s, _)| *s == local)
                    .map(|(_, t)| title_of(covered[*t]))
                    .collect();
                let (sentences, assoc) = text_for(spec, lang_idx, area, member);
                records.push(ArticleRecord {
                    language: lang.clone(),
                    title: title_of(member),
                    item: member_id(area, member),
                    outlinks,
                    structure: structure_for(spec, lang_idx, area, member),
                    sentences,
                    topic_vector: Some(topics_for(spec, lang_idx, area, member)),
                    assoc_series: Some(assoc),
                });
            }
        }
    }
    records.sort_by(|a, b| (&a.language, &a.title).cmp(&(&b.language, &b.title)));
    records
}

/// Closed-form expectations for the regimes that force exact values.
pub fn expectations(spec: &FixtureSpec) -> Expectations {
    let languages: Vec<String> = (0..spec.languages).map(language_code).collect();
    let area_seeds: Vec<String> =
        (0..spec.areas).map(|a| area_seed_id(a).as_str().to_owned()).collect();
    let covered = spec.covered_count();
    let mut cases = Vec::new();

    let windows_disjoint = spec.layout == CoverageLayout::Staggered
        && spec.languages * covered <= spec.members_per_area;
    let all_windows_full = match spec.layout {
        CoverageLayout::Shared => covered > 0,
        CoverageLayout::Staggered => {
            (0..spec.languages).all(|l| spec.window(l).1 == covered) && covered > 0
        }
    };
    let arcs_nonempty = spec.arc_density > 0.0 && covered >= 2;

    let mut push = |area: &str, li: &str, lj: &str, measure: MeasureKind, value: f64| {
        cases.push(ExpectedCase {
            area: area.to_owned(),
            lang_i: li.to_owned(),
            lang_j: lj.to_owned(),
            measure,
            value,
            tolerance: 1e-12,
        });
    };

    for seed in &area_seeds {
        for (i, li) in languages.iter().enumerate() {
            for lj in &languages[i + 1..] {
                match spec.layout {
                    CoverageLayout::Shared if covered > 0 => {
                        push(seed, li, lj, MeasureKind::Ges, 1.0);
                        push(seed, li, lj, MeasureKind::DeltaCon, 1.0);
                        push(seed, li, lj, MeasureKind::Ejs, if arcs_nonempty { 1.0 } else { 0.0 });
                        push(
                            seed,
                            li,
                            lj,
                            MeasureKind::Cgs,
                            covered as f64 / spec.members_per_area as f64,
                        );
                        if matches!(spec.sv1, VectorRegime::Identical | VectorRegime::Proportional)
                        {
                            push(seed, li, lj, MeasureKind::Sv1, 1.0);
                        }
                        if spec.sv1 == VectorRegime::Orthogonal && spec.languages <= 9 {
                            push(seed, li, lj, MeasureKind::Sv1, 0.0);
                        }
                        if matches!(spec.sv2, VectorRegime::Identical | VectorRegime::Proportional)
                        {
                            push(seed, li, lj, MeasureKind::Sv2, 1.0);
                        }
                        if spec.sv2 == VectorRegime::Orthogonal && spec.languages <= 98 {
                            push(seed, li, lj, MeasureKind::Sv2, 0.0);
                        }
                        if spec.sv3 == VectorRegime::Identical {
                            push(seed, li, lj, MeasureKind::Sv3, 1.0);
                        }
                    }
                    CoverageLayout::Staggered if windows_disjoint && all_windows_full => {
                        for m in MeasureKind::ALL {
                            push(seed, li, lj, m, 0.0);
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    Expectations {
        spec: spec.clone(),
        languages,
        oecd_roots: vec!["Q1".to_owned()],
        area_seeds,
        cases,
    }
}

/// Member item ids of one generated area, used by tests that evaluate
/// measures directly against the expectations.
pub fn area_members(spec: &FixtureSpec, area: usize) -> BTreeSet<ItemId> {
    (0..spec.members_per_area).map(|m| member_id(area, m)).collect()
}
