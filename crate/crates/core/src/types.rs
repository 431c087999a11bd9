//! Identifiers and small enums shared across the crate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Opaque Wikidata item identifier, by convention `Q<digits>`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(String);

impl ItemId {
    pub fn new(id: impl Into<String>) -> Self {
        ItemId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ItemId({})", self.0)
    }
}

impl From<&str> for ItemId {
    fn from(s: &str) -> Self {
        ItemId(s.to_owned())
    }
}

impl From<String> for ItemId {
    fn from(s: String) -> Self {
        ItemId(s)
    }
}

/// Lowercase IETF-style language tag ("de", "en", "pt-br", ...).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Lang(String);

impl Lang {
    pub fn new(tag: impl Into<String>) -> Self {
        Lang(tag.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lang({})", self.0)
    }
}

impl From<&str> for Lang {
    fn from(s: &str) -> Self {
        Lang(s.to_owned())
    }
}

impl From<String> for Lang {
    fn from(s: String) -> Self {
        Lang(s)
    }
}

/// Arc labels of the knowledge graph, with their Wikidata property codes.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum ArcLabel {
    SubclassOf,
    Studies,
    InstanceOf,
}

impl ArcLabel {
    pub const ALL: [ArcLabel; 3] = [ArcLabel::SubclassOf, ArcLabel::Studies, ArcLabel::InstanceOf];

    pub fn property_code(self) -> &'static str {
        match self {
            ArcLabel::SubclassOf => "P279",
            ArcLabel::Studies => "P2578",
            ArcLabel::InstanceOf => "P31",
        }
    }

    pub fn from_property_code(code: &str) -> Option<Self> {
        match code {
            "P279" => Some(ArcLabel::SubclassOf),
            "P2578" => Some(ArcLabel::Studies),
            "P31" => Some(ArcLabel::InstanceOf),
            _ => None,
        }
    }
}

/// The three intratextual feature views.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum FeatureView {
    /// Logical document structure counts (11 dimensions).
    Sv1,
    /// Topic distribution over DDC level-2 classes (98 dimensions).
    Sv2,
    /// Quantitative text structure indices (27 dimensions).
    Sv3,
}

impl FeatureView {
    pub const ALL: [FeatureView; 3] = [FeatureView::Sv1, FeatureView::Sv2, FeatureView::Sv3];

    pub fn dims(self) -> usize {
        match self {
            FeatureView::Sv1 => 11,
            FeatureView::Sv2 => 98,
            FeatureView::Sv3 => 27,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureView::Sv1 => "sv1",
            FeatureView::Sv2 => "sv2",
            FeatureView::Sv3 => "sv3",
        }
    }
}

impl fmt::Display for FeatureView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// All seven similarity measures: three vertex-content views plus four
/// graph-structural measures.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Sv1,
    Sv2,
    Sv3,
    Ges,
    Ejs,
    DeltaCon,
    Cgs,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 7] = [
        MeasureKind::Sv1,
        MeasureKind::Sv2,
        MeasureKind::Sv3,
        MeasureKind::Ges,
        MeasureKind::Ejs,
        MeasureKind::DeltaCon,
        MeasureKind::Cgs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MeasureKind::Sv1 => "sv1",
            MeasureKind::Sv2 => "sv2",
            MeasureKind::Sv3 => "sv3",
            MeasureKind::Ges => "ges",
            MeasureKind::Ejs => "ejs",
            MeasureKind::DeltaCon => "deltacon",
            MeasureKind::Cgs => "cgs",
        }
    }

    /// The feature view behind a vertex-content measure, if any.
    pub fn view(self) -> Option<FeatureView> {
        match self {
            MeasureKind::Sv1 => Some(FeatureView::Sv1),
            MeasureKind::Sv2 => Some(FeatureView::Sv2),
            MeasureKind::Sv3 => Some(FeatureView::Sv3),
            _ => None,
        }
    }

    pub fn is_structural(self) -> bool {
        self.view().is_none()
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeasureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sv1" => Ok(MeasureKind::Sv1),
            "sv2" => Ok(MeasureKind::Sv2),
            "sv3" => Ok(MeasureKind::Sv3),
            "ges" => Ok(MeasureKind::Ges),
            "ejs" => Ok(MeasureKind::Ejs),
            "deltacon" => Ok(MeasureKind::DeltaCon),
            "cgs" => Ok(MeasureKind::Cgs),
            other => Err(format!("unknown measure `{other}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn property_codes_round_trip() {
        for label in ArcLabel::ALL {
            assert_eq!(ArcLabel::from_property_code(label.property_code()), Some(label));
        }
        assert_eq!(ArcLabel::from_property_code("P18"), None);
    }

    #[test]
    fn measure_names_round_trip() {
        for m in MeasureKind::ALL {
            assert_eq!(m.as_str().parse::<MeasureKind>().unwrap(), m);
        }
        assert!("ppr".parse::<MeasureKind>().is_err());
    }

    #[test]
    fn view_dims() {
        assert_eq!(FeatureView::Sv1.dims(), 11);
        assert_eq!(FeatureView::Sv2.dims(), 98);
        assert_eq!(FeatureView::Sv3.dims(), 27);
    }
}
