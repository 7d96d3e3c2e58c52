use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TimeInterval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationSource {
    Manual,
    Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawAnnotation {
    pub interval: TimeInterval,
    pub label: String,
    pub source: AnnotationSource,
}

pub fn parse_annotation_file(path: &Path, source: AnnotationSource) -> Result<Vec<RawAnnotation>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(&text, source, &path.display().to_string())
}

/// Parses `start<TAB>end<TAB>label` records. Blank lines and lines starting
/// with `#` are skipped. The result is stably sorted by start time.
pub fn parse_annotations(text: &str, source: AnnotationSource, file: &str) -> Result<Vec<RawAnnotation>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (Some(start), Some(end), Some(label)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(file, line_no, "expected start<TAB>end<TAB>label"));
        };
        let start = parse_time(start, file, line_no)?;
        let end = parse_time(end, file, line_no)?;
        if end < start {
            return Err(Error::parse(file, line_no, "end before start"));
        }
        let label = label.trim();
        if label.is_empty() {
            return Err(Error::parse(file, line_no, "empty label"));
        }
        out.push(RawAnnotation {
            interval: TimeInterval { start, end },
            label: label.to_string(),
            source,
        });
    }
    out.sort_by(|a, b| a.interval.start.total_cmp(&b.interval.start));
    Ok(out)
}

fn parse_time(field: &str, file: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::parse(file, line, format!("non-numeric time {:?}", field.trim())))?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::parse(file, line, format!("time {v} must be finite and >= 0")));
    }
    Ok(v)
}

/// Inverse of [`parse_annotations`].
pub fn format_annotations(annotations: &[RawAnnotation]) -> String {
    let mut s = String::new();
    for a in annotations {
        let _ = writeln!(s, "{}\t{}\t{}", a.interval.start, a.interval.end, a.label);
    }
    s
}
