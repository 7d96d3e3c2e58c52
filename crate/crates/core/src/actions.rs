//! Teaching-action events: rule detectors for hand waving and slide
//! changes, adapters for externally labelled actions, and the merged
//! timeline document.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ingest::{AnnotationSource, LumaSample, RawAnnotation};
use crate::model::{Joint, PoseKeypoints, TimeInterval};

/// Events of the same kind and source closer than this are coalesced.
pub const MERGE_GAP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    WritingOnBoard,
    PointingAtBoard,
    GesturingAtBoard,
    HandGesture,
    SlideChange,
    Custom(String),
}

impl ActionKind {
    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionKind::WritingOnBoard => f.write_str("writing_on_board"),
            ActionKind::PointingAtBoard => f.write_str("pointing_at_board"),
            ActionKind::GesturingAtBoard => f.write_str("gesturing_at_board"),
            ActionKind::HandGesture => f.write_str("hand_gesture"),
            ActionKind::SlideChange => f.write_str("slide_change"),
            ActionKind::Custom(label) => write!(f, "custom:{label}"),
        }
    }
}

impl FromStr for ActionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "writing_on_board" => ActionKind::WritingOnBoard,
            "pointing_at_board" => ActionKind::PointingAtBoard,
            "gesturing_at_board" => ActionKind::GesturingAtBoard,
            "hand_gesture" => ActionKind::HandGesture,
            "slide_change" => ActionKind::SlideChange,
            other => {
                let label = other.strip_prefix("custom:").unwrap_or(other).trim();
                if label.is_empty() {
                    return Err(Error::InvalidValue("empty action label".into()));
                }
                ActionKind::Custom(label.to_string())
            }
        })
    }
}

impl Serialize for ActionKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ActionKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventSource {
    Manual,
    Model,
    Rule,
}

impl From<AnnotationSource> for EventSource {
    fn from(s: AnnotationSource) -> Self {
        match s {
            AnnotationSource::Manual => EventSource::Manual,
            AnnotationSource::Model => EventSource::Model,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionEvent {
    pub kind: ActionKind,
    pub start: f64,
    pub end: f64,
    pub confidence: f64,
    pub source: EventSource,
}

impl ActionEvent {
    pub fn interval(&self) -> TimeInterval {
        TimeInterval {
            start: self.start,
            end: self.end,
        }
    }
}

/// The timeline document written to `timeline.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTimeline {
    pub session_id: String,
    pub events: Vec<ActionEvent>,
}

impl EventTimeline {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HandWaveParams {
    /// Sliding window length in seconds.
    pub window: f64,
    /// Horizontal direction reversals needed inside one window.
    pub min_reversals: usize,
    /// Per-step horizontal motion below this is treated as stillness.
    pub min_step: f64,
    pub visibility_threshold: f64,
}

impl Default for HandWaveParams {
    fn default() -> Self {
        Self {
            window: 1.5,
            min_reversals: 2,
            min_step: 0.002,
            visibility_threshold: crate::model::DEFAULT_VISIBILITY_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlideChangeParams {
    /// Minimum frame-to-frame luminance jump.
    pub threshold: f64,
    /// Minimum spacing between reported changes, seconds.
    pub debounce: f64,
}

impl Default for SlideChangeParams {
    fn default() -> Self {
        Self {
            threshold: 0.08,
            debounce: 2.0,
        }
    }
}

/// One raised-wrist observation: time, horizontal position.
type WristPoint = (f64, f64);

fn raised_wrist_runs(poses: &[(f64, Option<&PoseKeypoints>)], wrist: Joint, shoulder: Joint, thr: f64) -> Vec<Vec<WristPoint>> {
    let mut runs: Vec<Vec<WristPoint>> = Vec::new();
    let mut current: Vec<WristPoint> = Vec::new();
    for (t, pose) in poses {
        let raised = pose.and_then(|p| {
            let w = p.usable(wrist, thr)?;
            let s = p.usable(shoulder, thr)?;
            (w.y < s.y).then_some(w.x)
        });
        match raised {
            Some(x) => current.push((*t, x)),
            None => {
                if !current.is_empty() {
                    runs.push(std::mem::take(&mut current));
                }
            }
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    runs
}

fn count_reversals(points: &[WristPoint], min_step: f64) -> usize {
    let mut last_sign = 0i8;
    let mut reversals = 0;
    for pair in points.windows(2) {
        let dx = pair[1].1 - pair[0].1;
        if dx.abs() < min_step {
            continue;
        }
        let sign = if dx > 0.0 { 1 } else { -1 };
        if last_sign != 0 && sign != last_sign {
            reversals += 1;
        }
        last_sign = sign;
    }
    reversals
}

/// Hand waving: a wrist held above its shoulder whose horizontal motion
/// reverses direction at least `min_reversals` times within one window.
/// Qualifying windows are merged into events.
pub fn detect_hand_wave(poses: &[(f64, Option<&PoseKeypoints>)], params: &HandWaveParams) -> Vec<ActionEvent> {
    let mut spans: Vec<TimeInterval> = Vec::new();
    let sides = [
        (Joint::LeftWrist, Joint::LeftShoulder),
        (Joint::RightWrist, Joint::RightShoulder),
    ];
    for (wrist, shoulder) in sides {
        for run in raised_wrist_runs(poses, wrist, shoulder, params.visibility_threshold) {
            let mut hi = 0;
            for lo in 0..run.len() {
                hi = hi.max(lo);
                while hi + 1 < run.len() && run[hi + 1].0 - run[lo].0 <= params.window {
                    hi += 1;
                }
                let window = &run[lo..=hi];
                if count_reversals(window, params.min_step) >= params.min_reversals {
                    spans.push(TimeInterval {
                        start: window[0].0,
                        end: window[window.len() - 1].0,
                    });
                }
            }
        }
    }
    crate::model::merge_intervals(&spans)
        .into_iter()
        .map(|iv| ActionEvent {
            kind: ActionKind::HandGesture,
            start: iv.start,
            end: iv.end,
            confidence: 1.0,
            source: EventSource::Rule,
        })
        .collect()
}

/// Zero-length slide-change events where the screen luminance jumps by more
/// than the threshold, at least `debounce` seconds apart.
pub fn detect_slide_change(signal: &[LumaSample], params: &SlideChangeParams) -> Vec<ActionEvent> {
    let mut out: Vec<ActionEvent> = Vec::new();
    for pair in signal.windows(2) {
        let t = pair[1].time;
        if (pair[1].luma - pair[0].luma).abs() <= params.threshold {
            continue;
        }
        if out.last().is_some_and(|e| t - e.start < params.debounce) {
            continue;
        }
        out.push(ActionEvent {
            kind: ActionKind::SlideChange,
            start: t,
            end: t,
            confidence: 1.0,
            source: EventSource::Rule,
        });
    }
    out
}

/// Maps labelled intervals to events. Labels missing from `label_map`
/// become custom kinds.
pub fn events_from_annotations(annotations: &[RawAnnotation], label_map: &BTreeMap<String, ActionKind>) -> Vec<ActionEvent> {
    annotations
        .iter()
        .map(|a| ActionEvent {
            kind: label_map
                .get(&a.label)
                .cloned()
                .unwrap_or_else(|| ActionKind::Custom(a.label.clone())),
            start: a.interval.start,
            end: a.interval.end,
            confidence: 1.0,
            source: a.source.into(),
        })
        .collect()
}

/// Model-produced labels as events with `source = model`.
pub fn ingest_model_actions(annotations: &[RawAnnotation], label_map: &BTreeMap<String, ActionKind>) -> Vec<ActionEvent> {
    let mut events = events_from_annotations(annotations, label_map);
    for e in &mut events {
        e.source = EventSource::Model;
    }
    events
}

/// Sorts all events by start and coalesces same-kind, same-source events
/// that overlap or sit within [`MERGE_GAP`] of each other.
pub fn merge_timeline(session_id: &str, sources: Vec<Vec<ActionEvent>>) -> EventTimeline {
    let mut groups: BTreeMap<(ActionKind, EventSource), Vec<ActionEvent>> = BTreeMap::new();
    for e in sources.into_iter().flatten() {
        groups.entry((e.kind.clone(), e.source)).or_default().push(e);
    }
    let mut events = Vec::new();
    for (_, mut group) in groups {
        group.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end)));
        let mut merged: Vec<ActionEvent> = Vec::with_capacity(group.len());
        for e in group {
            match merged.last_mut() {
                Some(last) if e.start <= last.end + MERGE_GAP => {
                    last.end = last.end.max(e.end);
                    last.confidence = last.confidence.max(e.confidence);
                }
                _ => merged.push(e),
            }
        }
        events.extend(merged);
    }
    events.sort_by(|a, b| {
        a.start
            .total_cmp(&b.start)
            .then(a.end.total_cmp(&b.end))
            .then_with(|| a.kind.cmp(&b.kind))
            .then(a.source.cmp(&b.source))
    });
    EventTimeline {
        session_id: session_id.to_string(),
        events,
    }
}
