//! Heatmap, zone occupancy, position traces and the downsampled X-Y series.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ingest::Zone;
use crate::model::NormPoint;
use crate::tracking::{TeacherTrack, TrackSample};

/// Sample counts over a `rows x cols` grid of the unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub rows: usize,
    pub cols: usize,
    /// Row-major counts; row 0 is the top of the image.
    pub counts: Vec<Vec<u64>>,
    pub total: u64,
    /// Per-cell fraction of samples; `None` for an empty track.
    pub normalized: Option<Vec<Vec<f64>>>,
}

fn cell(v: f64, n: usize) -> usize {
    ((v * n as f64).floor().max(0.0) as usize).min(n - 1)
}

pub fn compute_heatmap(track: &TeacherTrack, rows: usize, cols: usize) -> HeatmapGrid {
    let rows = rows.max(1);
    let cols = cols.max(1);
    let mut counts = vec![vec![0u64; cols]; rows];
    for s in &track.samples {
        counts[cell(s.point.y, rows)][cell(s.point.x, cols)] += 1;
    }
    let total = track.samples.len() as u64;
    let normalized = (total > 0).then(|| {
        counts
            .iter()
            .map(|row| row.iter().map(|c| *c as f64 / total as f64).collect())
            .collect()
    });
    HeatmapGrid { rows, cols, counts, total, normalized }
}

fn on_segment(p: &NormPoint, a: &NormPoint, b: &NormPoint) -> bool {
    const EPS: f64 = 1e-12;
    let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    cross.abs() <= EPS
        && p.x >= a.x.min(b.x) - EPS
        && p.x <= a.x.max(b.x) + EPS
        && p.y >= a.y.min(b.y) - EPS
        && p.y <= a.y.max(b.y) + EPS
}

/// Point-in-polygon with a closed boundary: points on an edge are inside.
pub fn point_in_polygon(p: &NormPoint, polygon: &[NormPoint]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    for i in 0..n {
        let a = &polygon[i];
        let b = &polygon[(i + 1) % n];
        if on_segment(p, a, b) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneOccupancy {
    /// Fraction of track samples inside each zone; `None` without samples.
    pub fractions: BTreeMap<String, Option<f64>>,
    pub samples: usize,
}

pub fn zone_occupancy(track: &TeacherTrack, zones: &[Zone]) -> ZoneOccupancy {
    let n = track.samples.len();
    let fractions = zones
        .iter()
        .map(|z| {
            let poly = z.vertices();
            let inside = track.samples.iter().filter(|s| point_in_polygon(&s.point, &poly)).count();
            (z.name.clone(), (n > 0).then(|| inside as f64 / n as f64))
        })
        .collect();
    ZoneOccupancy { fractions, samples: n }
}

/// Samples with time in `(now - span, now]`, in track order.
pub fn trace_window(track: &TeacherTrack, now: f64, span: f64) -> Vec<TrackSample> {
    let lo = now - span;
    track.samples.iter().filter(|s| s.time > lo && s.time <= now).copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XyPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// Keeps the sample nearest each `step` tick (within half a step), without
/// repeating a sample.
pub fn xy_series(track: &TeacherTrack, step: f64) -> Vec<XyPoint> {
    let s = &track.samples;
    let mut out: Vec<XyPoint> = Vec::new();
    let (Some(first), Some(last)) = (s.first(), s.last()) else { return out };
    let mut last_index: Option<usize> = None;
    let mut k = (first.time / step).floor() as i64;
    let mut i = 0;
    loop {
        let tick = k as f64 * step;
        if tick > last.time + 0.5 * step {
            break;
        }
        while i + 1 < s.len() && (s[i + 1].time - tick).abs() <= (s[i].time - tick).abs() {
            i += 1;
        }
        if (s[i].time - tick).abs() <= 0.5 * step && last_index != Some(i) {
            out.push(XyPoint { t: s[i].time, x: s[i].point.x, y: s[i].point.y });
            last_index = Some(i);
        }
        k += 1;
    }
    out
}
