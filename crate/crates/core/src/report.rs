//! Run reports: what was packed, with which settings, and how it went.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::packer::PackingResult;
use crate::pipeline::{AssemblyPlan, HistoryEntry};
use crate::tetmesh::TetMesh;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub hierarchy_ms: f64,
    pub packing_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    /// SHA-256 over the input files, in order.
    pub input_digest: String,
    /// The configuration as given; feeding it back reproduces the run.
    pub config: Value,
    pub n_parts: usize,
    pub result: PackingResult,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<HistoryEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_efficiency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_reached: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assembly: Option<AssemblyPlan>,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub timings: Timings,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// JSON with every timing field removed, for comparing runs.
    pub fn to_json_without_timing(&self) -> String {
        json_without_timing(&serde_json::to_value(self).expect("reports serialize"))
    }
}

/// Pretty JSON of `v` without `timings` and `elapsed_ms` keys at any depth.
pub fn json_without_timing(v: &Value) -> String {
    fn strip(v: &mut Value) {
        match v {
            Value::Object(m) => {
                m.remove("timings");
                m.remove("elapsed_ms");
                m.values_mut().for_each(strip);
            }
            Value::Array(a) => a.iter_mut().for_each(strip),
            _ => {}
        }
    }
    let mut v = v.clone();
    strip(&mut v);
    serde_json::to_string_pretty(&v).expect("values serialize")
}

pub fn sha256_hex<'a>(chunks: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut h = Sha256::new();
    for c in chunks {
        h.update(c);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of a mesh held in memory, over its `.node` / `.ele` text.
pub fn mesh_digest(mesh: &TetMesh) -> String {
    let (node, ele) = crate::tetmesh::tetgen_text(mesh);
    sha256_hex([node.as_bytes(), ele.as_bytes()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tetmesh::synth::cube5;

    #[test]
    fn digest_is_stable() {
        assert_eq!(
            sha256_hex([b"ab".as_slice(), b"c".as_slice()]),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(mesh_digest(&cube5(1.0)), mesh_digest(&cube5(1.0)));
        assert_ne!(mesh_digest(&cube5(1.0)), mesh_digest(&cube5(2.0)));
    }

    #[test]
    fn timing_is_stripped_everywhere() {
        let v = serde_json::json!({"a": 1, "elapsed_ms": 3.0, "timings": {}, "h": [{"elapsed_ms": 1, "n": 2}]});
        let s = json_without_timing(&v);
        assert!(!s.contains("elapsed_ms") && !s.contains("timings"));
        assert!(s.contains("\"n\": 2"));
    }
}
