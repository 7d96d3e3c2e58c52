//! Startup scan of the data directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use teachlens_core::actions::{ActionEvent, EventTimeline};
use teachlens_core::analytics::{SessionSummary, XyPoint, SUMMARY_FILE, TIMELINE_FILE};
use teachlens_core::ingest::{read_manifest, MANIFEST_FILE};
use teachlens_core::speech::WindowFeatures;

/// One row of `GET /api/sessions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionIndexEntry {
    pub session_id: String,
    pub duration: Option<f64>,
    /// RFC 3339 modification time of `summary.json`.
    pub analyzed_at: Option<String>,
    pub media_available: bool,
    pub analyzed: bool,
}

#[derive(Debug, Clone)]
pub struct AnalyzedSession {
    pub summary_bytes: Vec<u8>,
    pub summary: SessionSummary,
    pub timeline: EventTimeline,
}

#[derive(Debug, Clone)]
pub struct SessionEntry {
    pub index: SessionIndexEntry,
    pub dir: PathBuf,
    pub media: Option<PathBuf>,
    pub analyzed: Option<AnalyzedSession>,
}

/// Immutable snapshot of every session under the data directory.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    pub sessions: BTreeMap<String, SessionEntry>,
}

fn load_analyzed(dir: &Path) -> Option<AnalyzedSession> {
    let summary_bytes = std::fs::read(dir.join(SUMMARY_FILE)).ok()?;
    let summary = SessionSummary::from_json(std::str::from_utf8(&summary_bytes).ok()?).ok()?;
    let timeline = EventTimeline::from_json(&std::fs::read_to_string(dir.join(TIMELINE_FILE)).ok()?).ok()?;
    Some(AnalyzedSession { summary_bytes, summary, timeline })
}

fn scan_session(id: String, dir: PathBuf) -> SessionEntry {
    let manifest = read_manifest(&dir).ok();
    let analyzed = load_analyzed(&dir);
    let media_rel = manifest
        .as_ref()
        .map(|m| m.media_path.clone())
        .or_else(|| analyzed.as_ref().map(|a| a.summary.media.path.clone()));
    let media = media_rel.map(|rel| dir.join(rel)).filter(|p| p.is_file());
    let analyzed_at = analyzed.as_ref().and_then(|_| {
        let modified: SystemTime = std::fs::metadata(dir.join(SUMMARY_FILE)).ok()?.modified().ok()?;
        Some(chrono::DateTime::<chrono::Utc>::from(modified).to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
    });
    let duration = analyzed
        .as_ref()
        .map(|a| a.summary.duration)
        .or_else(|| manifest.as_ref().map(|m| m.duration));
    SessionEntry {
        index: SessionIndexEntry {
            session_id: id,
            duration,
            analyzed_at,
            media_available: media.is_some(),
            analyzed: analyzed.is_some(),
        },
        dir,
        media,
        analyzed,
    }
}

impl Catalog {
    /// Every direct subdirectory holding a manifest or a summary is a
    /// session; its directory name is the session id.
    pub fn scan(data: &Path) -> std::io::Result<Self> {
        let mut sessions = BTreeMap::new();
        for entry in std::fs::read_dir(data)? {
            let entry = entry?;
            let dir = entry.path();
            if !dir.is_dir() || !(dir.join(MANIFEST_FILE).is_file() || dir.join(SUMMARY_FILE).is_file()) {
                continue;
            }
            let Some(id) = entry.file_name().to_str().map(String::from) else { continue };
            sessions.insert(id.clone(), scan_session(id, dir));
        }
        Ok(Self { sessions })
    }

    pub fn index(&self) -> Vec<SessionIndexEntry> {
        self.sessions.values().map(|s| s.index.clone()).collect()
    }
}

/// Body of `GET /api/sessions/{id}/timeline`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineSlice {
    pub session_id: String,
    pub from: f64,
    pub to: f64,
    pub windows: Vec<WindowFeatures>,
    pub track: Vec<XyPoint>,
    pub events: Vec<ActionEvent>,
}

fn intersects(start: f64, end: f64, from: f64, to: f64) -> bool {
    if start == end {
        from <= start && start <= to
    } else {
        start < to && end > from
    }
}

/// Fine windows and events overlapping `[from, to]` by a positive amount,
/// instantaneous events inside it, and track samples with `from <= t <= to`.
pub fn timeline_slice(summary: &SessionSummary, timeline: &EventTimeline, from: f64, to: f64) -> TimelineSlice {
    TimelineSlice {
        session_id: summary.session_id.clone(),
        from,
        to,
        windows: summary
            .windows
            .fine
            .iter()
            .filter(|w| intersects(w.interval.start, w.interval.end, from, to))
            .cloned()
            .collect(),
        track: summary.xy_series.iter().filter(|p| from <= p.t && p.t <= to).copied().collect(),
        events: timeline
            .events
            .iter()
            .filter(|e| intersects(e.start, e.end, from, to))
            .cloned()
            .collect(),
    }
}
