//! Self-describing JSON form of a network.

use nalgebra::DMatrix;
use pcornet_core::glasso::PcorNetwork;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub labels: Vec<String>,
    /// Row-major P x P weights.
    pub weights: Vec<f64>,
    #[serde(default)]
    pub meta: DocumentMeta,
}

/// Provenance of a network. Everything except `edge_count` is optional
/// so hand-written adjacency matrices can be imported.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DocumentMeta {
    pub gamma: Option<f64>,
    pub selected_lambda: Option<f64>,
    pub n: Option<usize>,
    pub edge_count: usize,
    pub cor_method: Option<String>,
    pub pd_repaired: Option<bool>,
    pub refit: Option<bool>,
    pub tool_version: Option<String>,
    pub seed: Option<u64>,
    pub config: Option<Value>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid network document: {0}")]
pub struct SchemaError(pub String);

impl NetworkDocument {
    pub fn from_network(net: &PcorNetwork, meta: DocumentMeta) -> Self {
        let p = net.dim();
        let weights = (0..p).flat_map(|i| (0..p).map(move |j| (i, j))).map(|(i, j)| net.weight(i, j)).collect();
        let meta = DocumentMeta { edge_count: net.edge_count(), ..meta };
        Self { labels: net.labels().to_vec(), weights, meta }
    }

    pub fn to_network(&self) -> Result<PcorNetwork, SchemaError> {
        let p = self.labels.len();
        if self.weights.len() != p * p {
            return Err(SchemaError(format!(
                "{} labels need {} weights, found {}",
                p,
                p * p,
                self.weights.len()
            )));
        }
        let w = DMatrix::from_row_slice(p, p, &self.weights);
        let net = PcorNetwork::new(w, self.labels.clone()).map_err(|e| SchemaError(e.to_string()))?;
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        let doc: Self = serde_json::from_str(text).map_err(|e| SchemaError(e.to_string()))?;
        doc.to_network()?;
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> NetworkDocument {
        let mut w = DMatrix::zeros(3, 3);
        w[(0, 1)] = 0.1 + 0.2;
        w[(1, 0)] = 0.1 + 0.2;
        w[(1, 2)] = -1.0 / 3.0;
        w[(2, 1)] = -1.0 / 3.0;
        let net = PcorNetwork::new(w, vec!["a".into(), "b".into(), "c\"q".into()]).unwrap();
        NetworkDocument::from_network(
            &net,
            DocumentMeta {
                gamma: Some(0.5),
                selected_lambda: Some(0.012345678901234567),
                n: Some(221),
                seed: Some(u64::MAX),
                config: Some(serde_json::json!({"gamma": 0.5, "ratio": 1e-300})),
                warnings: vec!["w".into()],
                ..Default::default()
            },
        )
    }

    #[test]
    fn round_trip_is_exact() {
        let doc = sample();
        assert_eq!(doc.meta.edge_count, 2);
        let back = NetworkDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_json(), doc.to_json());
    }

    #[test]
    fn minimal_documents_import() {
        let doc = NetworkDocument::from_json(r#"{"labels":["x","y"],"weights":[0,0.4,0.4,0]}"#).unwrap();
        assert_eq!(doc.to_network().unwrap().weight(0, 1), 0.4);
    }

    #[test]
    fn schema_violations() {
        for bad in [
            r#"{"labels":["x","y"],"weights":[0,0.4,0.4]}"#,
            r#"{"labels":["x","y"],"weights":[0,0.4,0.3,0]}"#,
            r#"{"labels":["x","y"],"weights":[1,0,0,0]}"#,
            r#"{"labels":["x","y"]}"#,
            "not json",
        ] {
            assert!(NetworkDocument::from_json(bad).is_err(), "{bad}");
        }
    }
}
