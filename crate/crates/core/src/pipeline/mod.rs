//! Batch orchestration of the whole measurement procedure: extraction,
//! feature computation, pairwise comparison, randomized baselines,
//! analytics and report rendering, with content-digest caching and a
//! reproducible run manifest.

pub mod config;
pub mod heatmap;
pub mod manifest;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    self, build_language_network, distance_correlation, size_value, spearman, strength_centrality,
    weighted_distance_correlation, AnalysisError, SimilarityMatrix, SizeKind,
};
use crate::baselines::{
    content_lower_bound, derive_seed, label_hash, structural_lower_bound, upper_bound_curve,
    BaselineError, BoundsBundle,
};
use crate::extract::{
    alignment_set, enumerate_candidate_areas, induce_item_network, resolve_members_labeled,
    ExtractError, ItemNetwork,
};
use crate::features::{
    lds_vector, qts_vector_with, topic_vector, vertex_cosine_similarity, FeatureError,
    FeatureTable, QtsConfig,
};
use crate::ingest::{parse_corpus, parse_knowledge_graph, ArticleRecord, IngestError};
use crate::netsim::{GraphMeasure, NetsimError, PprOptions, SimilarityResult};
use crate::types::{FeatureView, ItemId, Lang, MeasureKind};

pub use config::{AreaConfig, RunConfig};
pub use heatmap::{render_heatmap, render_heatmap_svg};
pub use manifest::{RunManifest, StageRecord};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Netsim(#[from] NetsimError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("stage {stage} failed ({context}): {source}")]
    Stage { stage: &'static str, context: String, source: Box<PipelineError> },
}

impl PipelineError {
    /// Process exit code: 2 for configuration errors, 3 for data errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Stage { source, .. } => source.exit_code(),
            _ => 3,
        }
    }

    fn in_stage(self, stage: &'static str, context: impl Into<String>) -> Self {
        PipelineError::Stage { stage, context: context.into(), source: Box::new(self) }
    }
}

/// The pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Extract,
    Features,
    Compare,
    Baseline,
    Analyze,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Extract,
        Stage::Features,
        Stage::Compare,
        Stage::Baseline,
        Stage::Analyze,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Extract => "extract",
            Stage::Features => "features",
            Stage::Compare => "compare",
            Stage::Baseline => "baseline",
            Stage::Analyze => "analyze",
            Stage::Report => "report",
        }
    }

    fn deps(self) -> &'static [Stage] {
        match self {
            Stage::Extract => &[],
            Stage::Features => &[Stage::Extract],
            Stage::Compare => &[Stage::Extract, Stage::Features],
            Stage::Baseline => &[Stage::Extract, Stage::Features, Stage::Compare],
            Stage::Analyze => &[Stage::Compare],
            Stage::Report => &[Stage::Compare],
        }
    }

    fn closure(self) -> BTreeSet<Stage> {
        let mut needed = BTreeSet::new();
        let mut frontier = vec![self];
        while let Some(stage) = frontier.pop() {
            if needed.insert(stage) {
                frontier.extend(stage.deps());
            }
        }
        needed
    }
}

struct Ctx<'a> {
    config: &'a RunConfig,
    out_dir: &'a Path,
    pool: Option<rayon::ThreadPool>,
}

impl Ctx<'_> {
    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }
}

struct StageOutput {
    files: Vec<String>,
    counters: BTreeMap<String, u64>,
}

/// Runs every stage.
pub fn run(config: &RunConfig) -> Result<RunManifest, PipelineError> {
    run_until(config, Stage::Report, true)
}

/// Runs the dependency closure of `target` (plus every prior stage when
/// `linear` is set, which is what the all-stage `run` command wants).
pub fn run_until(
    config: &RunConfig,
    target: Stage,
    linear: bool,
) -> Result<RunManifest, PipelineError> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir)?;
    let config_hash = config.semantic_hash()?;
    let previous = RunManifest::load(&config.out_dir);
    let mut manifest = RunManifest::new(config_hash.clone(), config.seed);

    let pool = match config.jobs {
        Some(jobs) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))?,
        ),
        None => None,
    };
    let ctx = Ctx { config, out_dir: &config.out_dir, pool };

    let needed: BTreeSet<Stage> = if linear {
        Stage::ALL.iter().copied().take_while(|s| *s <= target).collect()
    } else {
        target.closure()
    };

    let mut keys: BTreeMap<String, String> = BTreeMap::new();
    for stage in Stage::ALL {
        if !needed.contains(&stage) {
            continue;
        }
        let upstream: BTreeMap<String, String> = stage
            .deps()
            .iter()
            .filter_map(|d| keys.get(d.name()).map(|k| (d.name().to_owned(), k.clone())))
            .collect();
        let key = manifest::stage_key(stage.name(), &config_hash, &upstream);
        keys.insert(stage.name().to_owned(), key.clone());

        let reusable = previous.as_ref().and_then(|p| p.stage(stage.name())).filter(|record| {
            record.key == key && manifest::outputs_verify(&config.out_dir, &record.outputs)
        });
        let record = match reusable {
            Some(prev) => StageRecord { cached: true, duration_ms: 0, ..prev.clone() },
            None => {
                let started = Instant::now();
                let output = execute(stage, &ctx)?;
                StageRecord {
                    name: stage.name().to_owned(),
                    key,
                    cached: false,
                    outputs: manifest::digest_outputs(&config.out_dir, &output.files)?,
                    counters: output.counters,
                    duration_ms: started.elapsed().as_millis(),
                }
            }
        };
        for (counter, value) in &record.counters {
            *manifest.counters.entry(counter.clone()).or_insert(0) += value;
        }
        manifest.stages.push(record);
    }
    manifest.save(&config.out_dir)?;
    Ok(manifest)
}

fn execute(stage: Stage, ctx: &Ctx) -> Result<StageOutput, PipelineError> {
    match stage {
        Stage::Extract => stage_extract(ctx),
        Stage::Features => stage_features(ctx),
        Stage::Compare => stage_compare(ctx),
        Stage::Baseline => stage_baseline(ctx),
        Stage::Analyze => stage_analyze(ctx),
        Stage::Report => stage_report(ctx),
    }
}

fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

fn net_file(lang: &Lang, area_slug: &str) -> String {
    format!("in_{}_{}.json", slug(lang.as_str()), area_slug)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AreaMeta {
    id: String,
    seed: String,
    member_count: usize,
}

impl AreaMeta {
    fn slug(&self) -> String {
        slug(&self.id)
    }
}

fn roster(config: &RunConfig) -> BTreeSet<Lang> {
    config.languages.iter().map(|l| Lang::new(l.clone())).collect()
}

fn load_areas(out_dir: &Path) -> Result<Vec<AreaMeta>, PipelineError> {
    let text = std::fs::read_to_string(out_dir.join("areas.json"))?;
    serde_json::from_str(&text)
        .map_err(|e| PipelineError::Config(format!("areas.json unreadable: {e}")))
}

fn load_network(out_dir: &Path, lang: &Lang, area_slug: &str) -> Result<ItemNetwork, PipelineError> {
    let path = out_dir.join(net_file(lang, area_slug));
    let text = std::fs::read_to_string(&path)?;
    serde_json::from_str(&text)
        .map_err(|e| PipelineError::Config(format!("{} unreadable: {e}", path.display())))
}

type NetworkMap = BTreeMap<(Lang, String), ItemNetwork>;

fn load_networks(ctx: &Ctx, areas: &[AreaMeta]) -> Result<NetworkMap, PipelineError> {
    let mut networks = NetworkMap::new();
    for area in areas {
        for lang in roster(ctx.config) {
            let net = load_network(ctx.out_dir, &lang, &area.slug())?;
            networks.insert((lang, area.id.clone()), net);
        }
    }
    Ok(networks)
}

// ---------------------------------------------------------------------------
// extract

fn stage_extract(ctx: &Ctx) -> Result<StageOutput, PipelineError> {
    let stage = "extract";
    let config = ctx.config;
    let (graph, gstats) =
        parse_knowledge_graph(&config.items).map_err(|e| PipelineError::from(e).in_stage(stage, "items"))?;
    let languages = roster(config);
    let (corpus, cstats) = parse_corpus(&config.articles, &languages)
        .map_err(|e| PipelineError::from(e).in_stage(stage, "articles"))?;

    let mut areas = Vec::new();
    if config.areas.is_empty() {
        let roots: BTreeSet<ItemId> =
            config.oecd_roots.iter().map(|r| ItemId::new(r.clone())).collect();
        let seeds = enumerate_candidate_areas(&graph, &roots)
            .map_err(|e| PipelineError::from(e).in_stage(stage, "area enumeration"))?;
        for seed in seeds {
            areas.push(
                resolve_members_labeled(&graph, &seed, seed.as_str())
                    .map_err(|e| PipelineError::from(e).in_stage(stage, format!("area {seed}")))?,
            );
        }
    } else {
        for area in &config.areas {
            areas.push(
                resolve_members_labeled(&graph, &ItemId::new(area.seed.clone()), &area.id)
                    .map_err(|e| {
                        PipelineError::from(e).in_stage(stage, format!("area {}", area.id))
                    })?,
            );
        }
    }
    areas.sort_by(|a, b| a.id.cmp(&b.id));

    let mut slugs = BTreeMap::new();
    for area in &areas {
        if let Some(other) = slugs.insert(slug(&area.id), area.id.clone()) {
            return Err(PipelineError::Config(format!(
                "area ids `{}` and `{}` collide as file names",
                other, area.id
            )));
        }
    }

    let mut files = Vec::new();
    let mut empty_ins = 0u64;
    for area in &areas {
        for lang in &languages {
            let net = match corpus.language(lang) {
                Some(_) => induce_item_network(&corpus, lang, area).map_err(|e| {
                    PipelineError::from(e)
                        .in_stage(stage, format!("lang {lang}, area {}", area.id))
                })?,
                // A configured language without any records has an empty
                // network everywhere, mirroring the empty-IN exclusion.
                None => ItemNetwork::empty(lang.clone(), area.id.clone()),
            };
            if net.is_empty() {
                empty_ins += 1;
            }
            let file = net_file(lang, &slug(&area.id));
            write_json(&ctx.out_dir.join(&file), &net)?;
            files.push(file);
        }
    }

    let metas: Vec<AreaMeta> = areas
        .iter()
        .map(|a| AreaMeta {
            id: a.id.clone(),
            seed: a.seed.as_str().to_owned(),
            member_count: a.member_count(),
        })
        .collect();
    write_json(&ctx.out_dir.join("areas.json"), &metas)?;
    files.push("areas.json".to_owned());

    let counters: BTreeMap<String, u64> = [
        ("unknown_properties".to_owned(), gstats.unknown_properties),
        ("dropped_outlinks".to_owned(), cstats.dropped_outlinks),
        ("skipped_records".to_owned(), cstats.skipped_records),
        ("empty_ins".to_owned(), empty_ins),
        ("areas".to_owned(), areas.len() as u64),
    ]
    .into();
    Ok(StageOutput { files, counters })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| PipelineError::Config(format!("serialization: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// features

fn enabled_views(config: &RunConfig) -> Vec<FeatureView> {
    FeatureView::ALL
        .into_iter()
        .filter(|v| config.measures.iter().any(|m| m.view() == Some(*v)))
        .collect()
}

fn feature_file(lang: &Lang, view: FeatureView) -> String {
    format!("features_{}_{}.csv", slug(lang.as_str()), view.as_str())
}

fn stage_features(ctx: &Ctx) -> Result<StageOutput, PipelineError> {
    let stage = "features";
    let config = ctx.config;
    let views = enabled_views(config);
    let areas = load_areas(ctx.out_dir)?;
    let languages = roster(config);
    let (corpus, _) = parse_corpus(&config.articles, &languages)
        .map_err(|e| PipelineError::from(e).in_stage(stage, "articles"))?;

    // Items needed per language: the union of its network vertex sets.
    let mut needed: BTreeMap<Lang, BTreeSet<ItemId>> = BTreeMap::new();
    for area in &areas {
        for lang in &languages {
            let net = load_network(ctx.out_dir, lang, &area.slug())?;
            needed.entry(lang.clone()).or_default().extend(net.vertices().iter().cloned());
        }
    }

    let qts_config = QtsConfig { difficult_word_min_chars: config.difficult_word_min_chars };
    let mut files = Vec::new();
    let mut duplicate_item_articles = 0u64;
    for lang in &languages {
        // Title-sorted scan keeps the item -> article choice deterministic
        // when several articles carry the same item.
        let mut by_item: BTreeMap<ItemId, &ArticleRecord> = BTreeMap::new();
        if let Some(slice) = corpus.language(lang) {
            for record in slice.articles.values() {
                if by_item.contains_key(&record.item) {
                    duplicate_item_articles += 1;
                } else {
                    by_item.insert(record.item.clone(), record);
                }
            }
        }
        let items = needed.get(lang).cloned().unwrap_or_default();
        for view in &views {
            let file = feature_file(lang, *view);
            let mut writer = csv::Writer::from_path(ctx.out_dir.join(&file))?;
            let mut header = vec!["item".to_owned()];
            header.extend(dim_names(*view));
            writer.write_record(&header)?;
            for item in &items {
                let record = by_item.get(item).ok_or_else(|| {
                    PipelineError::Config(format!(
                        "network vertex {item} has no article in language {lang}"
                    ))
                })?;
                let values = match view {
                    FeatureView::Sv1 => lds_vector(&record.structure).values,
                    FeatureView::Sv2 => topic_vector(record)
                        .map_err(|e| {
                            PipelineError::from(e)
                                .in_stage(stage, format!("lang {lang}, item {item}"))
                        })?
                        .values,
                    FeatureView::Sv3 => qts_vector_with(record, &qts_config)
                        .map_err(|e| {
                            PipelineError::from(e)
                                .in_stage(stage, format!("lang {lang}, item {item}"))
                        })?
                        .values,
                };
                let mut row = vec![item.as_str().to_owned()];
                row.extend(values.iter().map(|v| format!("{v}")));
                writer.write_record(&row)?;
            }
            writer.flush()?;
            files.push(file);
        }
    }

    let counters: BTreeMap<String, u64> =
        [("duplicate_item_articles".to_owned(), duplicate_item_articles)].into();
    Ok(StageOutput { files, counters })
}

fn dim_names(view: FeatureView) -> Vec<String> {
    match view {
        FeatureView::Sv1 => {
            crate::features::StructureCounts::DIM_NAMES.iter().map(|s| s.to_string()).collect()
        }
        FeatureView::Sv2 => (0..view.dims()).map(|d| format!("ddc_{d:02}")).collect(),
        FeatureView::Sv3 => crate::features::QTS_DIM_NAMES.iter().map(|s| s.to_string()).collect(),
    }
}

fn load_feature_table(
    out_dir: &Path,
    lang: &Lang,
    view: FeatureView,
) -> Result<FeatureTable, PipelineError> {
    let mut reader = csv::Reader::from_path(out_dir.join(feature_file(lang, view)))?;
    let mut table = FeatureTable::new();
    for record in reader.records() {
        let record = record?;
        let item = ItemId::new(record.get(0).unwrap_or_default());
        let values = record
            .iter()
            .skip(1)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| PipelineError::Config(format!("bad feature value `{v}`: {e}")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        table.insert(item, values);
    }
    Ok(table)
}

type TableMap = BTreeMap<(Lang, FeatureView), FeatureTable>;

fn load_feature_tables(ctx: &Ctx) -> Result<TableMap, PipelineError> {
    let mut tables = TableMap::new();
    for lang in roster(ctx.config) {
        for view in enabled_views(ctx.config) {
            let table = load_feature_table(ctx.out_dir, &lang, view)?;
            tables.insert((lang.clone(), view), table);
        }
    }
    Ok(tables)
}

// ---------------------------------------------------------------------------
// compare

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub area: String,
    pub measure: MeasureKind,
    pub lang_i: String,
    pub lang_j: String,
    pub value: f64,
    pub order_i: usize,
    pub order_j: usize,
    pub size_i: usize,
    pub size_j: usize,
    pub shared_vertices: usize,
}

impl ComparisonRow {
    fn from_result(area: &str, li: &Lang, lj: &Lang, r: SimilarityResult) -> Self {
        ComparisonRow {
            area: area.to_owned(),
            measure: r.measure,
            lang_i: li.to_string(),
            lang_j: lj.to_string(),
            value: r.value,
            order_i: r.order_i,
            order_j: r.order_j,
            size_i: r.size_i,
            size_j: r.size_j,
            shared_vertices: r.shared_vertices,
        }
    }
}

fn graph_measures(config: &RunConfig, shareable: usize) -> Vec<GraphMeasure> {
    let ppr = PprOptions {
        alpha: config.alpha,
        eps: config.eps,
        max_iterations: config.max_iterations,
    };
    config
        .measures
        .iter()
        .filter_map(|m| match m {
            MeasureKind::Ges => Some(GraphMeasure::Ges),
            MeasureKind::Ejs => Some(GraphMeasure::Ejs),
            MeasureKind::DeltaCon => Some(GraphMeasure::DeltaCon(ppr)),
            MeasureKind::Cgs => Some(GraphMeasure::Cgs { shareable }),
            _ => None,
        })
        .collect()
}

/// Languages whose network for this area is non-empty, sorted by code.
fn present_languages(networks: &NetworkMap, area: &str, languages: &BTreeSet<Lang>) -> Vec<Lang> {
    languages
        .iter()
        .filter(|lang| {
            networks
                .get(&((*lang).clone(), area.to_owned()))
                .map(|n| !n.is_empty())
                .unwrap_or(false)
        })
        .cloned()
        .collect()
}

fn compare_pair(
    config: &RunConfig,
    area: &AreaMeta,
    i: &ItemNetwork,
    j: &ItemNetwork,
    tables: &TableMap,
) -> Result<Vec<ComparisonRow>, PipelineError> {
    let mut rows = Vec::new();
    for gm in graph_measures(config, area.member_count) {
        let result = gm.evaluate(i, j).map_err(|e| {
            PipelineError::from(e).in_stage(
                "compare",
                format!("area {}, {} vs {}", area.id, i.language, j.language),
            )
        })?;
        rows.push(ComparisonRow::from_result(&area.id, &i.language, &j.language, result));
    }
    for view in enabled_views(config) {
        let kind = match view {
            FeatureView::Sv1 => MeasureKind::Sv1,
            FeatureView::Sv2 => MeasureKind::Sv2,
            FeatureView::Sv3 => MeasureKind::Sv3,
        };
        if !config.measures.contains(&kind) {
            continue;
        }
        let al = alignment_set(i, j).map_err(PipelineError::from)?;
        let hi = &tables[&(i.language.clone(), view)];
        let hj = &tables[&(j.language.clone(), view)];
        let value = vertex_cosine_similarity(i, j, &al, hi, hj).map_err(|e| {
            PipelineError::from(e).in_stage(
                "compare",
                format!("area {}, {} vs {} under {}", area.id, i.language, j.language, kind),
            )
        })?;
        rows.push(ComparisonRow {
            area: area.id.clone(),
            measure: kind,
            lang_i: i.language.to_string(),
            lang_j: j.language.to_string(),
            value,
            order_i: i.order(),
            order_j: j.order(),
            size_i: i.size(),
            size_j: j.size(),
            shared_vertices: al.len(),
        });
    }
    Ok(rows)
}

fn stage_compare(ctx: &Ctx) -> Result<StageOutput, PipelineError> {
    let config = ctx.config;
    let areas = load_areas(ctx.out_dir)?;
    let networks = load_networks(ctx, &areas)?;
    let tables = load_feature_tables(ctx)?;
    let languages = roster(config);

    let mut tasks: Vec<(&AreaMeta, Lang, Lang)> = Vec::new();
    for area in &areas {
        let present = present_languages(&networks, &area.id, &languages);
        for (a, li) in present.iter().enumerate() {
            for lj in &present[a..] {
                tasks.push((area, li.clone(), lj.clone()));
            }
        }
    }

    let rows: Vec<Vec<ComparisonRow>> = ctx.install(|| {
        tasks
            .par_iter()
            .map(|(area, li, lj)| {
                let i = &networks[&(li.clone(), area.id.clone())];
                let j = &networks[&(lj.clone(), area.id.clone())];
                compare_pair(config, area, i, j, &tables)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut rows: Vec<ComparisonRow> = rows.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (&a.area, a.measure, &a.lang_i, &a.lang_j).cmp(&(&b.area, b.measure, &b.lang_i, &b.lang_j))
    });

    let file = "similarities.csv".to_owned();
    let mut writer = csv::Writer::from_path(ctx.out_dir.join(&file))?;
    for row in &rows {
        writer.serialize(row)?;
    }
    writer.flush()?;

    let counters: BTreeMap<String, u64> =
        [("comparisons_executed".to_owned(), rows.len() as u64)].into();
    Ok(StageOutput { files: vec![file], counters })
}

pub fn load_similarities(out_dir: &Path) -> Result<Vec<ComparisonRow>, PipelineError> {
    let mut reader = csv::Reader::from_path(out_dir.join("similarities.csv"))?;
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// baseline

#[derive(Debug, Serialize)]
struct BoundsRow<'a> {
    area: &'a str,
    kind: MeasureKind,
    lang_i: &'a str,
    lang_j: &'a str,
    observed: f64,
    random_mean: f64,
    random_sd: f64,
    runs: usize,
    seed: u64,
}

fn bounds_seed(config_seed: u64, label: &str, area: &str, li: &Lang, lj: &Lang, kind: MeasureKind) -> u64 {
    derive_seed(
        config_seed,
        &[
            label_hash(label),
            label_hash(area),
            label_hash(li.as_str()),
            label_hash(lj.as_str()),
            label_hash(kind.as_str()),
        ],
    )
}

fn stage_baseline(ctx: &Ctx) -> Result<StageOutput, PipelineError> {
    let stage = "baseline";
    let config = ctx.config;
    let areas = load_areas(ctx.out_dir)?;
    let networks = load_networks(ctx, &areas)?;
    let tables = load_feature_tables(ctx)?;
    let languages = roster(config);

    let mut tasks: Vec<(&AreaMeta, Lang, Lang, MeasureKind)> = Vec::new();
    for area in &areas {
        let present = present_languages(&networks, &area.id, &languages);
        for (a, li) in present.iter().enumerate() {
            for lj in &present[a + 1..] {
                for measure in &config.measures {
                    tasks.push((area, li.clone(), lj.clone(), *measure));
                }
            }
        }
    }

    let bundles: Vec<BoundsBundle> = ctx.install(|| {
        tasks
            .par_iter()
            .map(|(area, li, lj, measure)| -> Result<BoundsBundle, PipelineError> {
                let i = &networks[&(li.clone(), area.id.clone())];
                let j = &networks[&(lj.clone(), area.id.clone())];
                let context = || format!("area {}, {} vs {} under {}", area.id, li, lj, measure);
                match measure.view() {
                    Some(view) => {
                        let seed = bounds_seed(config.seed, "content", &area.id, li, lj, *measure);
                        let hi = &tables[&(li.clone(), view)];
                        let hj = &tables[&(lj.clone(), view)];
                        content_lower_bound(i, j, *measure, hi, hj, config.runs, seed)
                            .map_err(|e| PipelineError::from(e).in_stage(stage, context()))
                    }
                    None => {
                        let seed =
                            bounds_seed(config.seed, "structural", &area.id, li, lj, *measure);
                        let gm = graph_measures(config, area.member_count)
                            .into_iter()
                            .find(|g| g.kind() == *measure)
                            .expect("structural measure present");
                        structural_lower_bound(i, j, &gm, config.runs, seed)
                            .map_err(|e| PipelineError::from(e).in_stage(stage, context()))
                    }
                }
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let file = "bounds.csv".to_owned();
    let mut writer = csv::Writer::from_path(ctx.out_dir.join(&file))?;
    for b in &bundles {
        writer.serialize(BoundsRow {
            area: &b.context.area,
            kind: b.context.kind,
            lang_i: &b.context.lang_i,
            lang_j: &b.context.lang_j,
            observed: b.observed,
            random_mean: b.random_mean,
            random_sd: b.random_sd,
            runs: b.random_samples.len(),
            seed: b.seed,
        })?;
    }
    writer.flush()?;
    let mut files = vec![file];

    // Observed upper-bound curves per measure, over cross-language pairs.
    let rows = load_similarities(ctx.out_dir)?;
    for measure in &config.measures {
        let results: Vec<SimilarityResult> = rows
            .iter()
            .filter(|r| r.measure == *measure && r.lang_i != r.lang_j)
            .map(|r| SimilarityResult {
                measure: r.measure,
                value: r.value,
                order_i: r.order_i,
                order_j: r.order_j,
                size_i: r.size_i,
                size_j: r.size_j,
                shared_vertices: r.shared_vertices,
            })
            .collect();
        if results.is_empty() {
            continue;
        }
        let curve = upper_bound_curve(&results)
            .map_err(|e| PipelineError::from(e).in_stage(stage, measure.as_str()))?;
        let file = format!("ubcurve_{}.csv", measure.as_str());
        let mut writer = csv::Writer::from_path(ctx.out_dir.join(&file))?;
        writer.write_record(["min_order", "max_similarity"])?;
        for (bucket, value) in &curve.points {
            writer.write_record([bucket.to_string(), format!("{value}")])?;
        }
        writer.flush()?;
        files.push(file);
    }

    let counters: BTreeMap<String, u64> = [
        ("bounds_computed".to_owned(), bundles.len() as u64),
        ("randomization_runs".to_owned(), (bundles.len() * config.runs) as u64),
    ]
    .into();
    Ok(StageOutput { files, counters })
}

// ---------------------------------------------------------------------------
// analyze

/// Per-(measure, area) similarity matrices assembled from comparison rows.
pub fn matrices_from_rows(
    rows: &[ComparisonRow],
) -> Result<BTreeMap<(MeasureKind, String), SimilarityMatrix>, PipelineError> {
    let mut grouped: BTreeMap<(MeasureKind, String), Vec<&ComparisonRow>> = BTreeMap::new();
    for row in rows {
        grouped.entry((row.measure, row.area.clone())).or_default().push(row);
    }
    let mut matrices = BTreeMap::new();
    for ((measure, area), rows) in grouped {
        let mut meta: BTreeMap<Lang, (usize, usize)> = BTreeMap::new();
        let mut entries: BTreeMap<(Lang, Lang), f64> = BTreeMap::new();
        for row in rows {
            let li = Lang::new(row.lang_i.clone());
            let lj = Lang::new(row.lang_j.clone());
            meta.insert(li.clone(), (row.order_i, row.size_i));
            meta.insert(lj.clone(), (row.order_j, row.size_j));
            let key = if li <= lj { (li, lj) } else { (lj, li) };
            entries.insert(key, row.value);
        }
        let matrix = SimilarityMatrix::from_pairs(area.clone(), measure, &meta, &entries)?;
        matrices.insert((measure, area), matrix);
    }
    Ok(matrices)
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn stage_analyze(ctx: &Ctx) -> Result<StageOutput, PipelineError> {
    let config = ctx.config;
    let rows = load_similarities(ctx.out_dir)?;
    let matrices = matrices_from_rows(&rows)?;
    let mut files = Vec::new();

    // Raw similarity-over-min-order curves per (measure, area).
    for (measure, area) in matrices.keys() {
        let mut points: Vec<(usize, f64)> = rows
            .iter()
            .filter(|r| r.measure == *measure && &r.area == area && r.lang_i != r.lang_j)
            .map(|r| (r.order_i.min(r.order_j), r.value))
            .collect();
        if points.is_empty() {
            continue;
        }
        points.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let file = format!("curves_{}_{}.csv", measure.as_str(), slug(area));
        let mut writer = csv::Writer::from_path(ctx.out_dir.join(&file))?;
        writer.write_record(["min_order", "similarity"])?;
        for (min_order, value) in points {
            writer.write_record([min_order.to_string(), format!("{value}")])?;
        }
        writer.flush()?;
        files.push(file);
    }

    // Rank correlation of similarity against the four pair-size statistics.
    {
        let file = "sizecorr.csv".to_owned();
        let mut writer = csv::Writer::from_path(ctx.out_dir.join(&file))?;
        writer.write_record(["measure", "area", "size_kind", "n", "rho", "p_value", "degenerate"])?;
        for (measure, area) in matrices.keys() {
            let pairs: Vec<&ComparisonRow> = rows
                .iter()
                .filter(|r| r.measure == *measure && &r.area == area && r.lang_i != r.lang_j)
                .collect();
            if pairs.len() < 3 {
                continue;
            }
            for kind in SizeKind::ALL {
                let sizes: Result<Vec<f64>, AnalysisError> =
                    pairs.iter().map(|r| size_value(r.order_i, r.order_j, kind)).collect();
                let sizes = sizes.map_err(PipelineError::from)?;
                let values: Vec<f64> = pairs.iter().map(|r| r.value).collect();
                let result = spearman(&sizes, &values)?;
                writer.write_record([
                    measure.as_str().to_owned(),
                    area.clone(),
                    kind.as_str().to_owned(),
                    pairs.len().to_string(),
                    format!("{}", result.rho),
                    format!("{}", result.p_value),
                    result.degenerate.to_string(),
                ])?;
            }
        }
        writer.flush()?;
        files.push(file);
    }

    // Cross-measure rank correlation of the area orderings, when all seven
    // measures are enabled and enough areas have data.
    let area_ids: BTreeSet<String> = matrices.keys().map(|(_, a)| a.clone()).collect();
    let all_measures = MeasureKind::ALL.iter().all(|m| config.measures.contains(m));
    if all_measures {
        let mut complete_areas: Vec<String> = Vec::new();
        'areas: for area in &area_ids {
            for measure in MeasureKind::ALL {
                let has_pairs = matrices
                    .get(&(measure, area.clone()))
                    .map(|m| !m.off_diagonal().is_empty())
                    .unwrap_or(false);
                if !has_pairs {
                    continue 'areas;
                }
            }
            complete_areas.push(area.clone());
        }
        if complete_areas.len() >= 3 {
            let mut area_means: BTreeMap<MeasureKind, Vec<f64>> = BTreeMap::new();
            for measure in MeasureKind::ALL {
                let means: Vec<f64> = complete_areas
                    .iter()
                    .map(|area| {
                        mean(&matrices[&(measure, area.clone())].off_diagonal())
                            .expect("complete areas have pairs")
                    })
                    .collect();
                area_means.insert(measure, means);
            }
            let rc = analysis::measure_ranking_correlation(&area_means)?;
            let file = "rankcorr.csv".to_owned();
            let mut writer = csv::Writer::from_path(ctx.out_dir.join(&file))?;
            writer.write_record(["measure_i", "measure_j", "rho", "p_value"])?;
            for (a, ma) in rc.measures.iter().enumerate() {
                for (b, mb) in rc.measures.iter().enumerate() {
                    writer.write_record([
                        ma.as_str().to_owned(),
                        mb.as_str().to_owned(),
                        format!("{}", rc.rho[a][b]),
                        format!("{}", rc.p_values[a][b]),
                    ])?;
                }
            }
            writer.flush()?;
            files.push(file);
        }
    }

    // Language networks: threshold at the measure's global mean similarity.
    let mut networks_by_measure: BTreeMap<MeasureKind, BTreeMap<String, analysis::LanguageNetwork>> =
        BTreeMap::new();
    for measure in &config.measures {
        let all_values: Vec<f64> = matrices
            .iter()
            .filter(|((m, _), _)| m == measure)
            .flat_map(|(_, matrix)| matrix.off_diagonal())
            .collect();
        let Some(threshold) = mean(&all_values) else { continue };
        for ((m, area), matrix) in &matrices {
            if m != measure {
                continue;
            }
            let net = build_language_network(matrix, threshold);
            let strengths = strength_centrality(&net);
            let file = format!("langnet_{}_{}.json", measure.as_str(), slug(area));
            let nodes: Vec<serde_json::Value> = net
                .vertices
                .iter()
                .map(|v| {
                    serde_json::json!({
                        "lang": v.lang.as_str(),
                        "order": v.order,
                        "size": v.size,
                        "strength": strengths[&v.lang],
                    })
                })
                .collect();
            let edges: Vec<serde_json::Value> = net
                .edges
                .iter()
                .map(|e| {
                    serde_json::json!({
                        "a": e.a.as_str(),
                        "b": e.b.as_str(),
                        "weight": e.weight,
                    })
                })
                .collect();
            write_json(
                &ctx.out_dir.join(&file),
                &serde_json::json!({
                    "area": area,
                    "measure": measure.as_str(),
                    "threshold": threshold,
                    "nodes": nodes,
                    "edges": edges,
                }),
            )?;
            files.push(file);
            networks_by_measure
                .entry(*measure)
                .or_default()
                .insert(area.clone(), net);
        }
    }

    // Area-by-area distance correlations of language strengths, plain and
    // weighted by attained network strength.
    for (measure, nets) in &networks_by_measure {
        let measure_max = matrices
            .iter()
            .filter(|((m, _), _)| m == measure)
            .flat_map(|(_, matrix)| matrix.off_diagonal())
            .fold(f64::NEG_INFINITY, f64::max);
        let areas: Vec<&String> = nets.keys().collect();
        if areas.is_empty() {
            continue;
        }
        let plain_file = format!("dcor_{}.csv", measure.as_str());
        let weighted_file = format!("dcorw_{}.csv", measure.as_str());
        let mut plain = csv::Writer::from_path(ctx.out_dir.join(&plain_file))?;
        let mut weighted = csv::Writer::from_path(ctx.out_dir.join(&weighted_file))?;
        plain.write_record(["area_i", "area_j", "common_languages", "dcor"])?;
        weighted.write_record(["area_i", "area_j", "common_languages", "weighted_dcor"])?;
        for (a, area_i) in areas.iter().enumerate() {
            for area_j in &areas[a..] {
                let ni = &nets[*area_i];
                let nj = &nets[*area_j];
                let common: BTreeSet<Lang> =
                    ni.language_set().intersection(&nj.language_set()).cloned().collect();
                let (value, wvalue) = if common.len() < 2 {
                    (0.0, 0.0)
                } else {
                    let ri = ni.restricted(&common);
                    let rj = nj.restricted(&common);
                    let si = strength_centrality(&ri);
                    let sj = strength_centrality(&rj);
                    let xs: Vec<f64> = si.values().copied().collect();
                    let ys: Vec<f64> = sj.values().copied().collect();
                    let value = distance_correlation(&xs, &ys)?;
                    let wvalue = if measure_max > 0.0 {
                        weighted_distance_correlation(&ri, &rj, measure_max)?
                    } else {
                        0.0
                    };
                    (value, wvalue)
                };
                plain.write_record([
                    (*area_i).clone(),
                    (**area_j).clone(),
                    common.len().to_string(),
                    format!("{value}"),
                ])?;
                weighted.write_record([
                    (*area_i).clone(),
                    (**area_j).clone(),
                    common.len().to_string(),
                    format!("{wvalue}"),
                ])?;
            }
        }
        plain.flush()?;
        weighted.flush()?;
        files.push(plain_file);
        files.push(weighted_file);
    }

    let counters: BTreeMap<String, u64> =
        [("matrices_built".to_owned(), matrices.len() as u64)].into();
    Ok(StageOutput { files, counters })
}

// ---------------------------------------------------------------------------
// report

fn stage_report(ctx: &Ctx) -> Result<StageOutput, PipelineError> {
    let rows = load_similarities(ctx.out_dir)?;
    let matrices = matrices_from_rows(&rows)?;
    let mut files = Vec::new();
    for ((measure, area), matrix) in &matrices {
        let file = format!("heatmap_{}_{}.svg", measure.as_str(), slug(area));
        render_heatmap(matrix, &ctx.out_dir.join(&file))?;
        files.push(file);
    }
    let counters: BTreeMap<String, u64> =
        [("heatmaps_rendered".to_owned(), files.len() as u64)].into();
    Ok(StageOutput { files, counters })
}
