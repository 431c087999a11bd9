//! Batch-run configuration: a single JSON document whose defaults mirror
//! the reference parameters (alpha 0.85, 100 randomization runs, PageRank
//! epsilon 1e-10).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::types::MeasureKind;

use super::PipelineError;

fn default_alpha() -> f64 {
    0.85
}

fn default_eps() -> f64 {
    1e-10
}

fn default_max_iterations() -> usize {
    1000
}

fn default_runs() -> usize {
    100
}

fn default_measures() -> Vec<MeasureKind> {
    MeasureKind::ALL.to_vec()
}

fn default_difficult_word_min_chars() -> usize {
    10
}

/// An explicitly configured subject area.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AreaConfig {
    pub id: String,
    pub seed: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Path to the knowledge-graph dump subset (`items.jsonl`).
    pub items: PathBuf,
    /// Path to the article dump subset (`articles.jsonl`).
    pub articles: PathBuf,
    pub languages: Vec<String>,
    /// Hierarchy roots whose studies-targets become subject areas.
    #[serde(default)]
    pub oecd_roots: Vec<String>,
    /// Explicit subject areas; when present, roots are not consulted.
    #[serde(default)]
    pub areas: Vec<AreaConfig>,
    #[serde(default = "default_measures")]
    pub measures: Vec<MeasureKind>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Randomization runs per baseline bundle.
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: PathBuf,
    #[serde(default = "default_difficult_word_min_chars")]
    pub difficult_word_min_chars: usize,
    /// Worker threads; defaults to the global thread pool.
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            PipelineError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.languages.is_empty() {
            return Err(PipelineError::Config("at least one language is required".into()));
        }
        if self.oecd_roots.is_empty() && self.areas.is_empty() {
            return Err(PipelineError::Config(
                "either oecd_roots or explicit areas must be given".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(PipelineError::Config(format!("alpha {} outside (0,1)", self.alpha)));
        }
        if self.eps <= 0.0 {
            return Err(PipelineError::Config(format!("eps {} must be positive", self.eps)));
        }
        if self.runs < 1 {
            return Err(PipelineError::Config("runs must be at least 1".into()));
        }
        if self.measures.is_empty() {
            return Err(PipelineError::Config("at least one measure must be enabled".into()));
        }
        let unique: BTreeSet<&String> = self.languages.iter().collect();
        if unique.len() != self.languages.len() {
            return Err(PipelineError::Config("duplicate language in roster".into()));
        }
        let area_ids: BTreeSet<&String> = self.areas.iter().map(|a| &a.id).collect();
        if area_ids.len() != self.areas.len() {
            return Err(PipelineError::Config("duplicate area id".into()));
        }
        Ok(())
    }

    pub fn measure_set(&self) -> BTreeSet<MeasureKind> {
        self.measures.iter().copied().collect()
    }

    /// Canonical digest over the semantic configuration and the input file
    /// contents. Paths and the output directory are deliberately excluded:
    /// two runs over identical data are the same run wherever they live.
    pub fn semantic_hash(&self) -> Result<String, PipelineError> {
        let items_digest = super::manifest::file_sha256(&self.items)?;
        let articles_digest = super::manifest::file_sha256(&self.articles)?;
        let mut languages = self.languages.clone();
        languages.sort();
        let mut roots = self.oecd_roots.clone();
        roots.sort();
        let mut areas = self.areas.clone();
        areas.sort_by(|a, b| a.id.cmp(&b.id));
        let mut measures: Vec<&str> = self.measures.iter().map(|m| m.as_str()).collect();
        measures.sort();
        measures.dedup();
        let canonical = json!({
            "alpha": self.alpha,
            "areas": areas,
            "articles_sha256": articles_digest,
            "difficult_word_min_chars": self.difficult_word_min_chars,
            "eps": self.eps,
            "items_sha256": items_digest,
            "languages": languages,
            "max_iterations": self.max_iterations,
            "measures": measures,
            "oecd_roots": roots,
            "runs": self.runs,
            "seed": self.seed,
        });
        Ok(super::manifest::sha256_hex(canonical.to_string().as_bytes()))
    }
}
