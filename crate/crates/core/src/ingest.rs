//! Parsing of desk-scale dump subsets: the Wikidata-side knowledge graph
//! (`items.jsonl`) and the per-language article corpus (`articles.jsonl`).
//!
//! Both formats are newline-delimited JSON, one object per line. Parsing is
//! strict about schema, but lenient about graph completeness: arc targets
//! that never appear as their own line are materialized as bare items, since
//! dump subsets are inherently incomplete.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::StructureCounts;
use crate::types::{ArcLabel, ItemId, Lang};

pub const TOPIC_DIMS: usize = 98;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("article `{title}` has no item id")]
    MissingItemId { title: String },
    #[error("duplicate article `{title}` for language {lang}")]
    DuplicateArticle { lang: Lang, title: String },
    #[error("article `{title}` contains an empty sentence")]
    EmptySentence { title: String },
    #[error("article `{title}` has an invalid topic vector: {reason}")]
    InvalidTopicVector { title: String, reason: String },
    #[error("article `{title}` has an invalid association series: {reason}")]
    InvalidAssocSeries { title: String, reason: String },
    #[error("article `{title}` has invalid structure counts: {reason}")]
    InvalidStructure { title: String, reason: String },
}

/// A directed triple of the knowledge graph.
pub type Triple = (ItemId, ArcLabel, ItemId);

/// Wikidata as a directed labeled graph over item identifiers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KnowledgeGraph {
    items: BTreeSet<ItemId>,
    arcs: BTreeSet<Triple>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_item(&mut self, item: ItemId) {
        self.items.insert(item);
    }

    /// Inserts a triple, materializing both endpoints as items.
    pub fn insert_arc(&mut self, source: ItemId, label: ArcLabel, target: ItemId) {
        self.items.insert(source.clone());
        self.items.insert(target.clone());
        self.arcs.insert((source, label, target));
    }

    pub fn contains_item(&self, item: &ItemId) -> bool {
        self.items.contains(item)
    }

    pub fn items(&self) -> impl Iterator<Item = &ItemId> {
        self.items.iter()
    }

    pub fn arcs(&self) -> impl Iterator<Item = &Triple> {
        self.arcs.iter()
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    /// Targets of arcs leaving `source` under `label`.
    pub fn targets<'a>(
        &'a self,
        source: &'a ItemId,
        label: ArcLabel,
    ) -> impl Iterator<Item = &'a ItemId> + 'a {
        let lo = (source.clone(), label, ItemId::new(""));
        self.arcs
            .range(lo..)
            .take_while(move |(s, l, _)| s == source && *l == label)
            .map(|(_, _, t)| t)
    }

    /// Sources of arcs entering `target` under `label`. Linear in the arc
    /// count; fine at the dump-subset scales this crate targets.
    pub fn sources(&self, label: ArcLabel, target: &ItemId) -> impl Iterator<Item = &ItemId> + '_ {
        let target = target.clone();
        self.arcs
            .iter()
            .filter(move |(_, l, t)| *l == label && *t == target)
            .map(|(s, _, _)| s)
    }

    /// Writes the graph back out in the `items.jsonl` line format, one item
    /// per line in sorted order. Re-parsing the output yields an equal graph.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for item in &self.items {
            let claims: Vec<ItemClaim> = self
                .arcs
                .range((item.clone(), ArcLabel::ALL[0], ItemId::new(""))..)
                .take_while(|(s, _, _)| s == item)
                .map(|(_, label, target)| ItemClaim {
                    prop: label.property_code().to_owned(),
                    target: target.as_str().to_owned(),
                })
                .collect();
            let line = ItemLine { id: item.as_str().to_owned(), claims };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ItemClaim {
    prop: String,
    target: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ItemLine {
    id: String,
    #[serde(default)]
    claims: Vec<ItemClaim>,
}

/// Counters accumulated while loading a knowledge graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GraphStats {
    /// Claims whose property code maps to none of the known arc labels.
    pub unknown_properties: u64,
}

pub fn parse_knowledge_graph(path: &Path) -> Result<(KnowledgeGraph, GraphStats), IngestError> {
    let file = File::open(path)?;
    parse_knowledge_graph_reader(BufReader::new(file))
}

pub fn parse_knowledge_graph_reader<R: Read>(
    reader: BufReader<R>,
) -> Result<(KnowledgeGraph, GraphStats), IngestError> {
    let mut graph = KnowledgeGraph::new();
    let mut stats = GraphStats::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ItemLine =
            serde_json::from_str(&line).map_err(|e| IngestError::MalformedLine {
                line: line_no,
                reason: e.to_string(),
            })?;
        let source = ItemId::new(parsed.id);
        graph.insert_item(source.clone());
        for claim in parsed.claims {
            match ArcLabel::from_property_code(&claim.prop) {
                Some(label) => graph.insert_arc(source.clone(), label, ItemId::new(claim.target)),
                None => stats.unknown_properties += 1,
            }
        }
    }
    Ok((graph, stats))
}

/// One article's raw material as carried by the corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct ArticleRecord {
    pub language: Lang,
    pub title: String,
    pub item: ItemId,
    pub outlinks: Vec<String>,
    pub structure: StructureCounts,
    pub sentences: Vec<Vec<String>>,
    pub topic_vector: Option<Vec<f64>>,
    pub assoc_series: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ArticleLine {
    lang: String,
    title: String,
    qid: Option<String>,
    #[serde(default)]
    outlinks: Vec<String>,
    structure: StructureCounts,
    #[serde(default)]
    sentences: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    topics: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    assoc: Option<Vec<f64>>,
}

/// One language's slice of the corpus: articles keyed by title, plus the
/// title-level arc set resolved from outlinks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LanguageCorpus {
    pub articles: BTreeMap<String, ArticleRecord>,
    pub arcs: BTreeSet<(String, String)>,
}

/// The full multi-language corpus.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    languages: BTreeMap<Lang, LanguageCorpus>,
}

impl Corpus {
    pub fn languages(&self) -> impl Iterator<Item = &Lang> {
        self.languages.keys()
    }

    pub fn language(&self, lang: &Lang) -> Option<&LanguageCorpus> {
        self.languages.get(lang)
    }

    pub fn article_count(&self) -> usize {
        self.languages.values().map(|l| l.articles.len()).sum()
    }
}

/// Counters accumulated while loading a corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorpusStats {
    /// Outlinks pointing at titles absent from the same language's table.
    pub dropped_outlinks: u64,
    /// Records whose language was not requested.
    pub skipped_records: u64,
}

pub fn parse_corpus(
    path: &Path,
    languages: &BTreeSet<Lang>,
) -> Result<(Corpus, CorpusStats), IngestError> {
    let file = File::open(path)?;
    parse_corpus_reader(BufReader::new(file), languages)
}

pub fn parse_corpus_reader<R: Read>(
    reader: BufReader<R>,
    languages: &BTreeSet<Lang>,
) -> Result<(Corpus, CorpusStats), IngestError> {
    let mut stats = CorpusStats::default();
    let mut per_lang: BTreeMap<Lang, BTreeMap<String, ArticleRecord>> = BTreeMap::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ArticleLine =
            serde_json::from_str(&line).map_err(|e| IngestError::MalformedLine {
                line: line_no,
                reason: e.to_string(),
            })?;
        let lang = Lang::new(parsed.lang.clone());
        if !languages.contains(&lang) {
            stats.skipped_records += 1;
            continue;
        }
        let record = validate_record(lang.clone(), parsed)?;
        let table = per_lang.entry(lang.clone()).or_default();
        if table.contains_key(&record.title) {
            return Err(IngestError::DuplicateArticle { lang, title: record.title });
        }
        table.insert(record.title.clone(), record);
    }

    // Resolve outlinks only once all titles of a language are known.
    let mut corpus = Corpus::default();
    for (lang, articles) in per_lang {
        let mut arcs = BTreeSet::new();
        for record in articles.values() {
            for link in &record.outlinks {
                if articles.contains_key(link) {
                    arcs.insert((record.title.clone(), link.clone()));
                } else {
                    stats.dropped_outlinks += 1;
                }
            }
        }
        corpus.languages.insert(lang, LanguageCorpus { articles, arcs });
    }
    Ok((corpus, stats))
}

fn validate_record(lang: Lang, line: ArticleLine) -> Result<ArticleRecord, IngestError> {
    let title = line.title;
    let item = match line.qid {
        Some(qid) => ItemId::new(qid),
        None => return Err(IngestError::MissingItemId { title }),
    };
    if line.sentences.iter().any(|s| s.is_empty()) {
        return Err(IngestError::EmptySentence { title });
    }
    if let Some(topics) = &line.topics {
        if topics.len() != TOPIC_DIMS {
            return Err(IngestError::InvalidTopicVector {
                title,
                reason: format!("expected {TOPIC_DIMS} entries, found {}", topics.len()),
            });
        }
        if let Some((idx, value)) =
            topics.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(IngestError::InvalidTopicVector {
                title,
                reason: format!("entry {idx} = {value} outside [0,1]"),
            });
        }
    }
    if let Some(assoc) = &line.assoc {
        if let Some((idx, value)) =
            assoc.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(IngestError::InvalidAssocSeries {
                title,
                reason: format!("entry {idx} = {value} outside [0,1]"),
            });
        }
    }
    if line.structure.toc_depth == 0 && line.structure.toc_breadth != 0 {
        return Err(IngestError::InvalidStructure {
            title,
            reason: "toc_breadth nonzero while toc_depth is zero".to_owned(),
        });
    }
    Ok(ArticleRecord {
        language: lang,
        title,
        item,
        outlinks: line.outlinks,
        structure: line.structure,
        sentences: line.sentences,
        topic_vector: line.topics,
        assoc_series: line.assoc,
    })
}

/// Serializes an article record back to its line format (used by the fixture
/// generator; ingest itself never writes articles).
pub fn article_to_jsonl(record: &ArticleRecord) -> String {
    let line = ArticleLine {
        lang: record.language.as_str().to_owned(),
        title: record.title.clone(),
        qid: Some(record.item.as_str().to_owned()),
        outlinks: record.outlinks.clone(),
        structure: record.structure.clone(),
        sentences: record.sentences.clone(),
        topics: record.topic_vector.clone(),
        assoc: record.assoc_series.clone(),
    };
    serde_json::to_string(&line).expect("article serialization cannot fail")
}
