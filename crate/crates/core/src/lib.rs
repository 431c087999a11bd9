//! Extraction and cross-language similarity analysis of subject-area
//! article networks derived from Wikidata/Wikipedia dump subsets.

pub mod analysis;
pub mod baselines;
pub mod extract;
pub mod features;
pub mod fixtures;
pub mod ingest;
pub mod netsim;
pub mod pipeline;
pub mod types;

pub use types::{ArcLabel, FeatureView, ItemId, Lang, MeasureKind};
