//! Standalone SVG heatmaps of similarity matrices: axes sorted by network
//! order, a linear white-to-green ramp, and the raw cell values embedded as
//! metadata. Rendering is fully deterministic so goldens can be compared
//! byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::{AnalysisError, SimilarityMatrix};

use super::PipelineError;

const CELL: usize = 24;
const MARGIN_LEFT: usize = 64;
const MARGIN_TOP: usize = 64;
const MARGIN: usize = 12;

fn ramp(value: f64) -> (u8, u8, u8) {
    let v = value.clamp(0.0, 1.0);
    let lerp = |from: f64, to: f64| (from + (to - from) * v).round() as u8;
    // White at 0 to a saturated green at 1.
    (lerp(255.0, 0.0), lerp(255.0, 140.0), lerp(255.0, 0.0))
}

pub fn render_heatmap_svg(m: &SimilarityMatrix) -> Result<String, PipelineError> {
    if m.is_empty() {
        return Err(PipelineError::Analysis(AnalysisError::EmptyMatrix));
    }
    let n = m.len();
    let width = MARGIN_LEFT + n * CELL + MARGIN;
    let height = MARGIN_TOP + n * CELL + MARGIN;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let metadata = serde_json::json!({
        "area": m.area,
        "measure": m.measure.as_str(),
        "languages": m.languages.iter().map(|l| l.as_str()).collect::<Vec<_>>(),
        "orders": m.orders,
        "values": m.values,
    });
    let _ = writeln!(svg, "<metadata>{metadata}</metadata>");
    let _ = writeln!(
        svg,
        "<text x=\"{MARGIN_LEFT}\" y=\"16\" font-family=\"monospace\" font-size=\"12\">{} / {}</text>",
        xml_escape(&m.area),
        m.measure.as_str()
    );
    for (idx, lang) in m.languages.iter().enumerate() {
        let cx = MARGIN_LEFT + idx * CELL + CELL / 2;
        let _ = writeln!(
            svg,
            "<text x=\"{cx}\" y=\"{}\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"middle\">{}</text>",
            MARGIN_TOP - 6,
            xml_escape(lang.as_str())
        );
        let cy = MARGIN_TOP + idx * CELL + CELL / 2 + 4;
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{cy}\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"end\">{}</text>",
            MARGIN_LEFT - 6,
            xml_escape(lang.as_str())
        );
    }
    for r in 0..n {
        for c in 0..n {
            let value = m.values[r][c];
            let (red, green, blue) = ramp(value);
            let x = MARGIN_LEFT + c * CELL;
            let y = MARGIN_TOP + r * CELL;
            let _ = writeln!(
                svg,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"rgb({red},{green},{blue})\" stroke=\"#999\" stroke-width=\"0.5\" data-value=\"{value}\"/>"
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn render_heatmap(m: &SimilarityMatrix, path: &Path) -> Result<(), PipelineError> {
    let svg = render_heatmap_svg(m)?;
    std::fs::write(path, svg)?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Lang, MeasureKind};

    fn matrix(n: usize) -> SimilarityMatrix {
        let languages: Vec<Lang> = (0..n).map(|i| Lang::new(format!("l{i}"))).collect();
        let values = (0..n)
            .map(|r| (0..n).map(|c| if r == c { 1.0 } else { 0.25 }).collect())
            .collect();
        SimilarityMatrix {
            area: "area".into(),
            measure: MeasureKind::Ges,
            languages,
            orders: vec![1; n],
            sizes: vec![0; n],
            values,
        }
    }

    #[test]
    fn two_by_two_matrix_renders_four_cells() {
        let svg = render_heatmap_svg(&matrix(2)).unwrap();
        assert_eq!(svg.matches("<rect").count(), 4);
        // The diagonal sits at full saturation.
        assert_eq!(svg.matches("rgb(0,140,0)").count(), 2);
    }

    #[test]
    fn single_language_matrix_renders_one_cell() {
        let svg = render_heatmap_svg(&matrix(1)).unwrap();
        assert_eq!(svg.matches("<rect").count(), 1);
    }

    #[test]
    fn empty_matrix_is_rejected() {
        let m = SimilarityMatrix {
            area: "area".into(),
            measure: MeasureKind::Ges,
            languages: vec![],
            orders: vec![],
            sizes: vec![],
            values: vec![],
        };
        assert!(render_heatmap_svg(&m).is_err());
    }

    #[test]
    fn rendering_matches_committed_golden() {
        let svg = render_heatmap_svg(&matrix(2)).unwrap();
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/heatmap_2x2.svg");
        if std::env::var_os("BLESS_GOLDENS").is_some() {
            std::fs::write(path, &svg).unwrap();
        }
        let golden = std::fs::read_to_string(path).unwrap();
        assert_eq!(svg, golden);
    }
}
