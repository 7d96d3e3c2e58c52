use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BoundingBox, Keypoint, NormPoint, PoseKeypoints, Timestamp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonDetection {
    pub detection_id: i64,
    pub bbox: BoundingBox,
    pub pose: Option<PoseKeypoints>,
    pub confidence: f64,
}

/// All persons detected in one video frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDetections {
    pub frame_index: u64,
    pub timestamp: Timestamp,
    pub persons: Vec<PersonDetection>,
}

#[derive(Deserialize)]
struct RawFrame {
    frame: u64,
    #[serde(default)]
    persons: Vec<RawPerson>,
}

#[derive(Deserialize)]
struct RawPerson {
    id: i64,
    #[serde(rename = "box")]
    bbox: [f64; 4],
    #[serde(default)]
    kps: Option<Vec<[f64; 3]>>,
    conf: f64,
}

pub fn parse_detection_stream(path: &Path, fps: f64) -> Result<Vec<FrameDetections>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_detections(&text, fps, &path.display().to_string())
}

/// Parses the JSON-lines detection stream. Frames must strictly increase;
/// gaps are kept as-is.
pub fn parse_detections(text: &str, fps: f64, file: &str) -> Result<Vec<FrameDetections>> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::InvalidValue(format!("fps {fps} must be > 0")));
    }
    let mut frames: Vec<FrameDetections> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawFrame =
            serde_json::from_str(line).map_err(|e| Error::parse(file, line_no, format!("malformed record: {e}")))?;
        if let Some(prev) = frames.last() {
            if raw.frame <= prev.frame_index {
                return Err(Error::parse(file, line_no, format!("non-monotonic at line {line_no}")));
            }
        }
        let mut seen = HashSet::new();
        let mut persons = Vec::with_capacity(raw.persons.len());
        for p in raw.persons {
            if !seen.insert(p.id) {
                return Err(Error::parse(file, line_no, format!("duplicate detection id {}", p.id)));
            }
            persons.push(convert_person(p).map_err(|e| Error::parse(file, line_no, e.to_string()))?);
        }
        frames.push(FrameDetections {
            frame_index: raw.frame,
            timestamp: Timestamp::new(raw.frame as f64 / fps)?,
            persons,
        });
    }
    Ok(frames)
}

fn convert_person(p: RawPerson) -> Result<PersonDetection> {
    if !(0.0..=1.0).contains(&p.conf) {
        return Err(Error::InvalidValue(format!("confidence {} outside [0, 1]", p.conf)));
    }
    let [cx, cy, w, h] = p.bbox;
    let bbox = BoundingBox::from_cxcywh(cx, cy, w, h)?;
    let pose = match p.kps {
        None => None,
        Some(kps) => {
            let joints = kps
                .into_iter()
                .map(|[x, y, c]| Keypoint {
                    point: NormPoint::clamped(x, y),
                    confidence: c,
                })
                .collect();
            Some(PoseKeypoints::new(joints)?)
        }
    };
    Ok(PersonDetection {
        detection_id: p.id,
        bbox,
        pose,
        confidence: p.conf,
    })
}
