//! Action-time proportions, speaking/pausing balance and teaching style.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::spatial::point_in_polygon;
use crate::actions::EventTimeline;
use crate::ingest::{RawAnnotation, StyleClass, Zone};
use crate::model::{merge_intervals, union_length, NormPoint, TimeInterval};
use crate::speech::Utterance;
use crate::tracking::TeacherTrack;

pub const OTHER_ZONE: &str = "other";
pub const UNTRACKED_ZONE: &str = "untracked";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DonutParams {
    /// Events shorter than this take the zone at their midpoint.
    pub min_split: f64,
    /// A track sample stands for the teacher's zone this long after it.
    pub sample_hold: f64,
}

impl Default for DonutParams {
    fn default() -> Self {
        Self { min_split: 1.0, sample_hold: 0.5 }
    }
}

/// Donut data: outer ring per action kind plus the `none` remainder, inner
/// ring per kind and zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionProportions {
    /// Share of session time per kind. Time covered by several kinds is
    /// divided equally among them, so `outer` and `none` sum to 1.
    pub outer: BTreeMap<String, f64>,
    pub none: f64,
    /// Union of each kind's intervals over the session duration.
    pub coverage: BTreeMap<String, f64>,
    /// `inner[kind][zone]` sums to `outer[kind]` over zones.
    pub inner: BTreeMap<String, BTreeMap<String, f64>>,
}

/// Zone the teacher occupied over time, from track samples.
struct ZoneTimeline {
    times: Vec<f64>,
    labels: Vec<String>,
    hold: f64,
}

impl ZoneTimeline {
    fn new(track: &TeacherTrack, zones: &[Zone], hold: f64) -> Self {
        let polys: Vec<(String, Vec<NormPoint>)> = zones.iter().map(|z| (z.name.clone(), z.vertices())).collect();
        let labels = track
            .samples
            .iter()
            .map(|s| {
                polys
                    .iter()
                    .find(|(_, p)| point_in_polygon(&s.point, p))
                    .map_or_else(|| OTHER_ZONE.to_string(), |(n, _)| n.clone())
            })
            .collect();
        Self { times: track.samples.iter().map(|s| s.time).collect(), labels, hold }
    }

    fn at(&self, t: f64) -> &str {
        let i = self.times.partition_point(|s| *s <= t);
        if i == 0 || t - self.times[i - 1] > self.hold {
            UNTRACKED_ZONE
        } else {
            &self.labels[i - 1]
        }
    }
}

pub fn action_proportions(timeline: &EventTimeline, track: &TeacherTrack, zones: &[Zone], duration: f64, params: &DonutParams) -> ActionProportions {
    let mut by_kind: BTreeMap<String, Vec<TimeInterval>> = BTreeMap::new();
    for e in &timeline.events {
        let iv = by_kind.entry(e.kind.name()).or_default();
        let (s, t) = (e.start.clamp(0.0, duration), e.end.clamp(0.0, duration));
        if t > s {
            iv.push(TimeInterval { start: s, end: t });
        }
    }
    let unions: BTreeMap<String, Vec<TimeInterval>> = by_kind.iter().map(|(k, v)| (k.clone(), merge_intervals(v))).collect();

    let mut outer: BTreeMap<String, f64> = unions.keys().map(|k| (k.clone(), 0.0)).collect();
    let coverage = unions
        .iter()
        .map(|(k, v)| (k.clone(), if duration > 0.0 { union_length(v) / duration } else { 0.0 }))
        .collect();
    let mut inner: BTreeMap<String, BTreeMap<String, f64>> = unions.keys().map(|k| (k.clone(), BTreeMap::new())).collect();
    if duration <= 0.0 {
        return ActionProportions { outer, none: 1.0, coverage, inner };
    }

    let zt = ZoneTimeline::new(track, zones, params.sample_hold);
    let mut cuts = vec![0.0, duration];
    for v in unions.values() {
        for iv in v {
            cuts.extend([iv.start, iv.end]);
        }
    }
    for &t in &zt.times {
        cuts.extend([t, t + params.sample_hold]);
    }
    cuts.retain(|t| (0.0..=duration).contains(t));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut none = 0.0;
    let mut cursor: BTreeMap<&str, usize> = unions.keys().map(|k| (k.as_str(), 0)).collect();
    for seg in cuts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let mid = 0.5 * (a + b);
        let mut active: Vec<(&str, TimeInterval)> = Vec::new();
        for (k, v) in &unions {
            let c = cursor.get_mut(k.as_str()).expect("cursor per kind");
            while *c < v.len() && v[*c].end <= a {
                *c += 1;
            }
            if *c < v.len() && v[*c].start <= a && b <= v[*c].end {
                active.push((k, v[*c]));
            }
        }
        let len = b - a;
        if active.is_empty() {
            none += len;
            continue;
        }
        let share = len / active.len() as f64;
        for (k, iv) in active {
            *outer.get_mut(k).expect("kind") += share;
            let probe = if iv.duration() < params.min_split { 0.5 * (iv.start + iv.end) } else { mid };
            *inner.get_mut(k).expect("kind").entry(zt.at(probe).to_string()).or_insert(0.0) += share;
        }
    }
    for v in outer.values_mut() {
        *v /= duration;
    }
    for zones in inner.values_mut() {
        for v in zones.values_mut() {
            *v /= duration;
        }
    }
    ActionProportions { outer, none: none / duration, coverage, inner }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeakPause {
    pub speech_seconds: f64,
    pub pause_seconds: f64,
    pub speech_fraction: f64,
    pub pause_fraction: f64,
    /// Speech over pause; `None` when there is no pause.
    pub ratio: Option<f64>,
    pub ratio_infinite: bool,
}

pub fn speak_pause_ratio(utterances: &[Utterance], duration: f64) -> SpeakPause {
    let speech: f64 = utterances.iter().map(|u| u.duration()).sum::<f64>().min(duration.max(0.0));
    let pause = (duration - speech).max(0.0);
    let frac = |v: f64| if duration > 0.0 { v / duration } else { 0.0 };
    let infinite = pause == 0.0 && speech > 0.0;
    SpeakPause {
        speech_seconds: speech,
        pause_seconds: pause,
        speech_fraction: frac(speech),
        pause_fraction: frac(pause),
        ratio: if pause > 0.0 { Some(speech / pause) } else if speech > 0.0 { None } else { Some(0.0) },
        ratio_infinite: infinite,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeachingStyle {
    pub active_seconds: f64,
    pub passive_seconds: f64,
    /// `None` when no annotation maps to a style class.
    pub active_fraction: Option<f64>,
    pub passive_fraction: Option<f64>,
}

/// Active/passive balance from manual annotations; labels absent from
/// `style_map` are ignored.
pub fn teaching_style_balance(annotations: &[RawAnnotation], style_map: &BTreeMap<String, StyleClass>) -> TeachingStyle {
    let of = |class: StyleClass| {
        let iv: Vec<TimeInterval> = annotations
            .iter()
            .filter(|a| style_map.get(&a.label) == Some(&class))
            .map(|a| a.interval)
            .collect();
        union_length(&iv)
    };
    let active = of(StyleClass::Active);
    let passive = of(StyleClass::Passive);
    let total = active + passive;
    TeachingStyle {
        active_seconds: active,
        passive_seconds: passive,
        active_fraction: (total > 0.0).then(|| active / total),
        passive_fraction: (total > 0.0).then(|| passive / total),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::{ActionEvent, ActionKind, EventSource};
    use crate::ingest::AnnotationSource;
    use crate::tracking::TrackSample;
    use proptest::prelude::*;

    fn ev(kind: ActionKind, start: f64, end: f64) -> ActionEvent {
        ActionEvent { kind, start, end, confidence: 1.0, source: EventSource::Manual }
    }

    fn timeline(events: Vec<ActionEvent>) -> EventTimeline {
        EventTimeline { session_id: "s".into(), events }
    }

    fn board_and_students() -> Vec<Zone> {
        vec![
            Zone { name: "board".into(), polygon: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.4], [0.0, 0.4]] },
            Zone { name: "students".into(), polygon: vec![[0.0, 0.6], [1.0, 0.6], [1.0, 1.0], [0.0, 1.0]] },
        ]
    }

    /// Teacher at the board until `switch`, then among the students, sampled at 10 Hz.
    fn walking_track(duration: f64, switch: f64) -> TeacherTrack {
        let n = (duration * 10.0) as usize;
        TeacherTrack {
            track_id: 1,
            samples: (0..n)
                .map(|i| {
                    let t = i as f64 * 0.1;
                    let y = if t < switch { 0.2 } else { 0.8 };
                    TrackSample { time: t, point: NormPoint { x: 0.5, y }, matched: true }
                })
                .collect(),
            exits: vec![],
        }
    }

    #[test]
    fn single_kind_share() {
        let t = timeline(vec![ev(ActionKind::WritingOnBoard, 0.0, 600.0)]);
        let p = action_proportions(&t, &TeacherTrack::empty(), &[], 3600.0, &DonutParams::default());
        assert!((p.outer["writing_on_board"] - 1.0 / 6.0).abs() < 1e-12);
        assert!((p.none - 5.0 / 6.0).abs() < 1e-12);
        assert!((p.inner["writing_on_board"][UNTRACKED_ZONE] - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn overlapping_same_kind_counted_once() {
        let t = timeline(vec![ev(ActionKind::HandGesture, 0.0, 5.0), ev(ActionKind::HandGesture, 4.0, 9.0)]);
        let p = action_proportions(&t, &TeacherTrack::empty(), &[], 60.0, &DonutParams::default());
        assert!((p.outer["hand_gesture"] - 9.0 / 60.0).abs() < 1e-12);
        assert!((p.coverage["hand_gesture"] - 9.0 / 60.0).abs() < 1e-12);
    }

    #[test]
    fn empty_timeline_is_all_none() {
        let p = action_proportions(&timeline(vec![]), &TeacherTrack::empty(), &[], 60.0, &DonutParams::default());
        assert_eq!(p.none, 1.0);
        assert!(p.outer.is_empty());
    }

    #[test]
    fn overlapping_kinds_split_time() {
        let t = timeline(vec![ev(ActionKind::WritingOnBoard, 0.0, 10.0), ev(ActionKind::HandGesture, 5.0, 10.0)]);
        let p = action_proportions(&t, &TeacherTrack::empty(), &[], 20.0, &DonutParams::default());
        assert!((p.outer["writing_on_board"] - 7.5 / 20.0).abs() < 1e-12);
        assert!((p.outer["hand_gesture"] - 2.5 / 20.0).abs() < 1e-12);
        assert!((p.coverage["hand_gesture"] - 5.0 / 20.0).abs() < 1e-12);
        assert!((p.none - 0.5).abs() < 1e-12);
    }

    #[test]
    fn inner_ring_splits_by_zone() {
        let track = walking_track(60.0, 30.0);
        let t = timeline(vec![ev(ActionKind::PointingAtBoard, 20.0, 40.0), ev(ActionKind::SlideChange, 29.7, 30.5)]);
        let p = action_proportions(&t, &track, &board_and_students(), 60.0, &DonutParams::default());
        let inner = &p.inner["pointing_at_board"];
        let board = inner["board"] * 60.0;
        let students = inner["students"] * 60.0;
        assert!((board - 9.85).abs() < 1e-9, "{inner:?}");
        assert!((students - 9.75).abs() < 1e-9, "{inner:?}");
        // A short event sits wholly in the zone at its midpoint.
        assert_eq!(p.inner["slide_change"].keys().collect::<Vec<_>>(), vec!["students"]);
    }

    #[test]
    fn speak_pause_examples() {
        let u = |a: f64, b: f64| Utterance { interval: TimeInterval { start: a, end: b } };
        let r = speak_pause_ratio(&[u(0.0, 1200.0), u(1800.0, 3000.0)], 3600.0);
        assert_eq!(r.ratio, Some(2.0));
        assert_eq!(speak_pause_ratio(&[], 60.0).ratio, Some(0.0));
        let full = speak_pause_ratio(&[u(0.0, 60.0)], 60.0);
        assert_eq!(full.ratio, None);
        assert!(full.ratio_infinite);
    }

    fn ann(a: f64, b: f64, label: &str) -> RawAnnotation {
        RawAnnotation { interval: TimeInterval { start: a, end: b }, label: label.into(), source: AnnotationSource::Manual }
    }

    #[test]
    fn style_balance() {
        let map: BTreeMap<String, StyleClass> = [("lecture".to_string(), StyleClass::Passive), ("discussion".to_string(), StyleClass::Active)].into();
        let s = teaching_style_balance(&[ann(0.0, 1800.0, "discussion"), ann(1800.0, 3600.0, "lecture")], &map);
        assert_eq!((s.active_fraction, s.passive_fraction), (Some(0.5), Some(0.5)));
        let only = teaching_style_balance(&[ann(0.0, 10.0, "discussion"), ann(5.0, 20.0, "writing")], &map);
        assert_eq!((only.active_fraction, only.passive_fraction), (Some(1.0), Some(0.0)));
        let overlap = teaching_style_balance(&[ann(0.0, 10.0, "discussion"), ann(5.0, 15.0, "discussion"), ann(15.0, 30.0, "lecture")], &map);
        assert_eq!(overlap.active_seconds, 15.0);
        assert_eq!(overlap.active_fraction, Some(0.5));
        let none = teaching_style_balance(&[ann(0.0, 10.0, "writing")], &map);
        assert_eq!(none.active_fraction, None);
    }

    fn arb_events() -> impl Strategy<Value = Vec<ActionEvent>> {
        proptest::collection::vec((0usize..4, 0.0..120.0f64, 0.0..30.0f64), 0..30).prop_map(|v| {
            v.into_iter()
                .map(|(k, s, l)| {
                    let kind = [ActionKind::WritingOnBoard, ActionKind::HandGesture, ActionKind::SlideChange, ActionKind::Custom("quiz".into())][k].clone();
                    ev(kind, s, s + l)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn donut_sums_to_one(events in arb_events(), switch in 0.0..120.0f64) {
            let track = walking_track(100.0, switch);
            let p = action_proportions(&timeline(events), &track, &board_and_students(), 120.0, &DonutParams::default());
            let total: f64 = p.outer.values().sum::<f64>() + p.none;
            prop_assert!((total - 1.0).abs() < 1e-6);
            prop_assert!(p.outer.values().all(|v| *v >= 0.0) && p.none >= 0.0);
            for (k, zones) in &p.inner {
                prop_assert!((zones.values().sum::<f64>() - p.outer[k]).abs() < 1e-9);
            }
        }
    }
}
