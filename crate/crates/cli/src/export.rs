//! Text renderings of results: CSV tables, DOT and SVG drawings.
//!
//! Every rendering starts with the tool version, seed and effective
//! configuration, in the comment syntax of its format.

use std::fmt::Write as _;

use pcornet_core::bootstrap::{cs_from_levels, stability_levels, BootstrapResult, CsRating};
use pcornet_core::error::Result;
use pcornet_core::glasso::PcorNetwork;
use pcornet_core::network::{layout_fr, CentralityIndex, CentralityTable, Layout};
use pcornet_core::selection::SelectionTrace;
use serde_json::{json, Value};

use crate::document::TOOL_VERSION;

pub const POSITIVE_COLOR: &str = "#0000D5";
pub const NEGATIVE_COLOR: &str = "#BA0000";

/// Gamma values at which the trace table reports EBIC.
pub const TRACE_GAMMAS: [f64; 3] = [0.0, 0.25, 0.5];

/// What every output file records about the run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub seed: u64,
    pub config: Value,
}

impl RunMeta {
    fn config_json(&self) -> String {
        serde_json::to_string(&self.config).expect("config serializes")
    }

    /// `#` comment lines for CSV files.
    pub fn csv_header(&self) -> String {
        format!("# pcornet {TOOL_VERSION}\n# seed: {}\n# config: {}\n", self.seed, self.config_json())
    }

    /// The same record as a JSON object.
    pub fn json(&self) -> Value {
        serde_json::json!({ "tool_version": TOOL_VERSION, "seed": self.seed, "config": self.config })
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Non-zero edges, one per row.
pub fn edges_csv(net: &PcorNetwork, meta: &RunMeta) -> String {
    let mut out = meta.csv_header();
    out.push_str("from,to,weight\n");
    let labels = net.labels();
    for (i, j, w) in net.edges() {
        let _ = writeln!(out, "{},{},{}", csv_field(&labels[i]), csv_field(&labels[j]), w);
    }
    out
}

/// The penalty path, largest lambda first, with EBIC at the reporting
/// gammas and at the selection gamma.
pub fn trace_csv(trace: &SelectionTrace, meta: &RunMeta) -> String {
    let mut out = meta.csv_header();
    let scores: Vec<Vec<f64>> = TRACE_GAMMAS.iter().map(|&g| trace.ebic_at(g)).collect();
    out.push_str("lambda,edges,loglik,ebic_gamma_0,ebic_gamma_0.25,ebic_gamma_0.5,ebic_selection,converged,selected\n");
    for k in (0..trace.len()).rev() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            trace.lambdas[k],
            trace.edge_counts[k],
            trace.logliks[k],
            scores[0][k],
            scores[1][k],
            scores[2][k],
            trace.ebic[k],
            trace.converged[k],
            k == trace.selected_index
        );
    }
    out
}

pub fn centrality_csv(net: &PcorNetwork, table: &CentralityTable, meta: &RunMeta) -> String {
    let mut out = meta.csv_header();
    out.push_str("node,strength,closeness,betweenness,z_strength,z_closeness,z_betweenness\n");
    for (i, label) in net.labels().iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            csv_field(label),
            table.strength[i],
            table.closeness[i],
            table.betweenness[i],
            table.z_strength[i],
            table.z_closeness[i],
            table.z_betweenness[i]
        );
    }
    out
}

/// Case-dropping stability curves and CS-coefficients of every index.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub stability_csv: String,
    pub cs_csv: String,
    pub cs: Vec<(CentralityIndex, f64, CsRating)>,
    pub curves: Vec<Value>,
}

pub fn stability_report(
    res: &BootstrapResult,
    threshold: f64,
    certainty: f64,
    meta: &RunMeta,
) -> Result<StabilityReport> {
    let mut stability_csv = meta.csv_header();
    stability_csv.push_str("index,proportion,drop,replicates,mean_correlation,fraction_at_threshold\n");
    let mut cs_csv = meta.csv_header();
    cs_csv.push_str("index,cs,rating\n");
    let mut cs = Vec::new();
    let mut curves = Vec::new();
    for which in CentralityIndex::ALL {
        let levels = stability_levels(res, which)?;
        for l in &levels {
            let _ = writeln!(
                stability_csv,
                "{},{},{},{},{},{}",
                which.as_str(),
                l.proportion,
                l.drop_fraction(),
                l.correlations.len(),
                fmt_opt(l.mean_correlation()),
                l.fraction_at_least(threshold)
            );
            curves.push(json!({
                "index": which.as_str(),
                "proportion": l.proportion,
                "drop": l.drop_fraction(),
                "replicates": l.correlations.len(),
                "mean_correlation": l.mean_correlation(),
                "fraction_at_threshold": l.fraction_at_least(threshold),
            }));
        }
        let value = cs_from_levels(&levels, threshold, certainty);
        let rating = CsRating::of(value);
        let _ = writeln!(cs_csv, "{},{},{}", which.as_str(), value, rating.describe());
        cs.push((which, value, rating));
    }
    Ok(StabilityReport { stability_csv, cs_csv, cs, curves })
}

fn edge_color(w: f64) -> &'static str {
    if w < 0.0 {
        NEGATIVE_COLOR
    } else {
        POSITIVE_COLOR
    }
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn network_dot(net: &PcorNetwork, meta: &RunMeta) -> String {
    let mut out = format!(
        "// pcornet {TOOL_VERSION}\n// seed: {}\n// config: {}\ngraph pcornet {{\n  node [shape=circle];\n",
        meta.seed,
        meta.config_json()
    );
    for label in net.labels() {
        let _ = writeln!(out, "  {};", dot_id(label));
    }
    let labels = net.labels();
    for (i, j, w) in net.edges() {
        let _ = writeln!(
            out,
            "  {} -- {} [pcor={}, weight={}, label=\"{:.2}\", color=\"{}\", penwidth={:.3}];",
            dot_id(&labels[i]),
            dot_id(&labels[j]),
            w,
            w.abs(),
            w,
            edge_color(w),
            10.0 * w.abs()
        );
    }
    out.push_str("}\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const SVG_SIZE: f64 = 600.0;
const SVG_MARGIN: f64 = 50.0;
const NODE_RADIUS: f64 = 18.0;

/// Network drawing: nodes placed by the seeded force-directed layout,
/// edge width proportional to |w| and opacity |w| (saturating at 1).
pub fn network_svg(net: &PcorNetwork, meta: &RunMeta) -> String {
    network_svg_with_layout(net, &layout_fr(net, meta.seed), meta)
}

pub fn network_svg_with_layout(net: &PcorNetwork, layout: &Layout, meta: &RunMeta) -> String {
    let span = SVG_SIZE - 2.0 * SVG_MARGIN;
    let pos = |i: usize| {
        let (x, y) = layout.coords[i];
        (SVG_MARGIN + (x + 1.0) / 2.0 * span, SVG_MARGIN + (1.0 - y) / 2.0 * span)
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_SIZE}\" height=\"{SVG_SIZE}\" viewBox=\"0 0 {SVG_SIZE} {SVG_SIZE}\">"
    );
    let _ = writeln!(
        out,
        "<!-- pcornet {TOOL_VERSION}; seed: {}; config: {} -->",
        meta.seed,
        xml_escape(&meta.config_json()).replace("--", "- -")
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g id=\"edges\">\n");
    let mut edges = net.edges();
    edges.sort_by(|a, b| a.2.abs().total_cmp(&b.2.abs()).then((a.0, a.1).cmp(&(b.0, b.1))));
    let labels = net.labels();
    for (i, j, w) in edges {
        let ((x1, y1), (x2, y2)) = (pos(i), pos(j));
        let _ = writeln!(
            out,
            "<line x1=\"{x1:.3}\" y1=\"{y1:.3}\" x2=\"{x2:.3}\" y2=\"{y2:.3}\" stroke=\"{}\" stroke-width=\"{:.3}\" stroke-opacity=\"{:.3}\" stroke-linecap=\"round\"><title>{} -- {}: {}</title></line>",
            edge_color(w),
            10.0 * w.abs(),
            w.abs().min(1.0),
            xml_escape(&labels[i]),
            xml_escape(&labels[j]),
            w
        );
    }
    out.push_str("</g>\n<g id=\"nodes\">\n");
    for (i, label) in labels.iter().enumerate() {
        let (x, y) = pos(i);
        let _ = writeln!(
            out,
            "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{NODE_RADIUS}\" fill=\"white\" stroke=\"black\"/><text x=\"{x:.3}\" y=\"{y:.3}\" text-anchor=\"middle\" dominant-baseline=\"central\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            xml_escape(label)
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn meta() -> RunMeta {
        RunMeta { seed: 3, config: serde_json::json!({"gamma": 0.5}) }
    }

    fn signed() -> PcorNetwork {
        let mut w = DMatrix::zeros(3, 3);
        w[(0, 1)] = 0.3;
        w[(1, 0)] = 0.3;
        w[(1, 2)] = -0.3;
        w[(2, 1)] = -0.3;
        PcorNetwork::new(w, vec!["A".into(), "B".into(), "C".into()]).unwrap()
    }

    #[test]
    fn svg_colors_and_counts() {
        let svg = network_svg(&signed(), &meta());
        assert_eq!(svg.matches("<line").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains(&format!("stroke=\"{POSITIVE_COLOR}\"")));
        assert!(svg.contains(&format!("stroke=\"{NEGATIVE_COLOR}\"")));
        assert!(svg.contains("<title>B -- C: -0.3</title>") && svg.contains("stroke-width=\"3.000\""));
        assert_eq!(svg, network_svg(&signed(), &meta()));

        let empty = PcorNetwork::empty(vec!["A".into(), "B".into()]);
        let svg = network_svg(&empty, &meta());
        assert_eq!((svg.matches("<line").count(), svg.matches("<circle").count()), (0, 2));
    }

    #[test]
    fn headers_carry_run_record() {
        let csv = edges_csv(&signed(), &meta());
        assert!(csv.starts_with(&format!("# pcornet {TOOL_VERSION}\n# seed: 3\n# config: {{\"gamma\":0.5}}\n")));
        assert!(csv.contains("A,B,0.3\nB,C,-0.3\n"));
        assert!(network_dot(&signed(), &meta()).contains("\"B\" -- \"C\" [pcor=-0.3"));
    }
}
