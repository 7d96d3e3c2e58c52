use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::actions::ActionKind;
use crate::error::{Error, Result};
use crate::model::NormPoint;

pub const MANIFEST_FILE: &str = "session.json";

/// Zones the analytics require to exist.
pub const REQUIRED_ZONES: [&str; 2] = ["board", "students"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StyleClass {
    Active,
    Passive,
}

/// Named polygon in image-normalized coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zone {
    pub name: String,
    pub polygon: Vec<[f64; 2]>,
}

impl Zone {
    pub fn vertices(&self) -> Vec<NormPoint> {
        self.polygon.iter().map(|&[x, y]| NormPoint { x, y }).collect()
    }
}

/// Paths relative to the session directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamPaths {
    pub detections: String,
    pub audio: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_actions: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screen_luma: Option<String>,
}

/// Contents of `session.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionManifest {
    pub session_id: String,
    pub fps: f64,
    pub duration: f64,
    pub media_path: String,
    pub streams: StreamPaths,
    pub zones: Vec<Zone>,
    #[serde(default)]
    pub style_map: BTreeMap<String, StyleClass>,
    #[serde(default)]
    pub label_map: BTreeMap<String, ActionKind>,
    /// Overrides the configured MCDM feature list for this session.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scoring_features: Option<Vec<String>>,
}

/// Reads `<dir>/session.json` without checking its contents.
pub fn read_manifest(dir: &Path) -> Result<SessionManifest> {
    let path = dir.join(MANIFEST_FILE);
    if !path.is_file() {
        return Err(Error::ManifestMissing(path));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))
}

/// Reads and validates `<dir>/session.json`.
pub fn load_manifest(dir: &Path) -> Result<SessionManifest> {
    let manifest = read_manifest(dir)?;
    let problems = manifest.problems(dir);
    if let Some(first) = problems.into_iter().next() {
        return Err(Error::Manifest(first));
    }
    Ok(manifest)
}

impl SessionManifest {
    pub fn resolve(&self, dir: &Path, rel: &str) -> PathBuf {
        dir.join(rel)
    }

    pub fn zone(&self, name: &str) -> Option<&Zone> {
        self.zones.iter().find(|z| z.name == name)
    }

    /// Every contract violation, one message per finding.
    pub fn problems(&self, dir: &Path) -> Vec<String> {
        let mut out = Vec::new();
        if self.session_id.trim().is_empty() {
            out.push("session_id is empty".to_string());
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            out.push(format!("fps {} must be > 0", self.fps));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            out.push(format!("duration {} must be > 0", self.duration));
        }
        let mut names = BTreeSet::new();
        for z in &self.zones {
            if !names.insert(z.name.as_str()) {
                out.push(format!("zone '{}' defined twice", z.name));
            }
            if z.polygon.len() < 3 {
                out.push(format!("zone '{}' has {} vertices, needs at least 3", z.name, z.polygon.len()));
            }
            if z.polygon.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
                out.push(format!("zone '{}' has vertices outside the unit square", z.name));
            }
        }
        for required in REQUIRED_ZONES {
            if !names.contains(required) {
                out.push(format!("zone '{required}' is required"));
            }
        }
        let mut paths = vec![
            ("media_path", Some(&self.media_path)),
            ("streams.detections", Some(&self.streams.detections)),
            ("streams.audio", Some(&self.streams.audio)),
            ("streams.annotations", self.streams.annotations.as_ref()),
            ("streams.model_actions", self.streams.model_actions.as_ref()),
            ("streams.screen_luma", self.streams.screen_luma.as_ref()),
        ];
        for (field, rel) in paths.drain(..) {
            if let Some(rel) = rel {
                if !self.resolve(dir, rel).is_file() {
                    out.push(format!("{field}: file '{rel}' does not exist"));
                }
            }
        }
        out
    }

    /// Non-fatal findings: zones sharing an edge, where the closed boundary
    /// rule counts the edge for both zones.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, a) in self.zones.iter().enumerate() {
            for b in &self.zones[i + 1..] {
                if shares_edge(&a.polygon, &b.polygon) {
                    out.push(format!("zones '{}' and '{}' share an edge", a.name, b.name));
                }
            }
        }
        out
    }
}

fn edges(poly: &[[f64; 2]]) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
    (0..poly.len()).map(move |i| (poly[i], poly[(i + 1) % poly.len()]))
}

/// True when some edge of `a` and some edge of `b` are collinear and overlap
/// over a positive length.
fn shares_edge(a: &[[f64; 2]], b: &[[f64; 2]]) -> bool {
    const EPS: f64 = 1e-9;
    let cross = |o: [f64; 2], p: [f64; 2], q: [f64; 2]| (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0]);
    for (p0, p1) in edges(a) {
        let d = [p1[0] - p0[0], p1[1] - p0[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        if len2 < EPS {
            continue;
        }
        for (q0, q1) in edges(b) {
            if cross(p0, p1, q0).abs() > EPS || cross(p0, p1, q1).abs() > EPS {
                continue;
            }
            let proj = |q: [f64; 2]| ((q[0] - p0[0]) * d[0] + (q[1] - p0[1]) * d[1]) / len2;
            let (mut s0, mut s1) = (proj(q0), proj(q1));
            if s0 > s1 {
                std::mem::swap(&mut s0, &mut s1);
            }
            if s1.min(1.0) - s0.max(0.0) > EPS {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_json() -> String {
        r#"{
            "session_id": "s1",
            "fps": 10,
            "duration": 60,
            "media_path": "media.bin",
            "streams": {"detections": "d.jsonl", "audio": "a.wav"},
            "zones": [
                {"name": "board", "polygon": [[0,0],[1,0],[1,0.3],[0,0.3]]},
                {"name": "students", "polygon": [[0,0.5],[1,0.5],[1,1],[0,1]]}
            ],
            "label_map": {"writing on board": "writing_on_board"}
        }"#
        .to_string()
    }

    fn setup(json: &str) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for f in ["media.bin", "d.jsonl", "a.wav"] {
            std::fs::write(dir.path().join(f), b"").unwrap();
        }
        std::fs::write(dir.path().join(MANIFEST_FILE), json).unwrap();
        dir
    }

    #[test]
    fn loads_valid_manifest() {
        let dir = setup(&sample_json());
        let m = load_manifest(dir.path()).unwrap();
        assert_eq!(m.session_id, "s1");
        assert_eq!(m.label_map["writing on board"], ActionKind::WritingOnBoard);
        assert!(m.warnings().is_empty());
    }

    #[test]
    fn missing_manifest() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_manifest(dir.path()), Err(Error::ManifestMissing(_))));
    }

    #[test]
    fn two_vertex_zone_named() {
        let json = sample_json().replace("[[0,0],[1,0],[1,0.3],[0,0.3]]", "[[0,0],[1,0]]");
        let dir = setup(&json);
        let err = load_manifest(dir.path()).unwrap_err();
        assert!(err.to_string().contains("zone 'board' has 2 vertices"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let json = sample_json().replace("\"fps\": 10,", "\"fps\": 10, \"bogus\": 1,");
        let dir = setup(&json);
        assert!(load_manifest(dir.path()).is_err());
    }

    #[test]
    fn missing_stream_file() {
        let dir = setup(&sample_json());
        std::fs::remove_file(dir.path().join("d.jsonl")).unwrap();
        let err = load_manifest(dir.path()).unwrap_err();
        assert!(err.to_string().contains("streams.detections"), "{err}");
    }

    #[test]
    fn shared_edge_warning() {
        let json = sample_json().replace("[[0,0.5],[1,0.5],[1,1],[0,1]]", "[[0,0.3],[1,0.3],[1,1],[0,1]]");
        let dir = setup(&json);
        let m = load_manifest(dir.path()).unwrap();
        assert_eq!(m.warnings().len(), 1);
    }
}
