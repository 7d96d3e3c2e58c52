//! Shared domain types: session-relative time, image-normalized geometry and
//! pose skeletons.
//!
//! Positions live in the unit square with `x` growing left to right and `y`
//! growing top to bottom of the rear camera image. Every position used
//! downstream comes from [`foot_anchor`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default confidence below which a keypoint is treated as unusable.
pub const DEFAULT_VISIBILITY_THRESHOLD: f64 = 0.3;

/// Seconds from session start.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(f64);

impl Timestamp {
    pub fn new(seconds: f64) -> Result<Self> {
        if seconds.is_finite() && seconds >= 0.0 {
            Ok(Self(seconds))
        } else {
            Err(Error::InvalidValue(format!("timestamp {seconds} must be finite and >= 0")))
        }
    }

    pub const ZERO: Timestamp = Timestamp(0.0);

    #[inline]
    pub fn secs(self) -> f64 {
        self.0
    }
}

/// Closed time span `[start, end]` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeInterval {
    pub start: f64,
    pub end: f64,
}

impl TimeInterval {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || start < 0.0 {
            return Err(Error::InvalidValue(format!("interval [{start}, {end}] is not a valid time span")));
        }
        if end < start {
            return Err(Error::InvalidValue(format!("interval end {end} before start {start}")));
        }
        Ok(Self { start, end })
    }

    /// Zero-length interval at `t`.
    pub fn instant(t: f64) -> Result<Self> {
        Self::new(t, t)
    }

    #[inline]
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    /// Overlap of two intervals. Touching intervals yield a zero-length
    /// overlap, disjoint ones yield `None`.
    pub fn intersect(&self, other: &TimeInterval) -> Option<TimeInterval> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        (start <= end).then_some(TimeInterval { start, end })
    }

    #[inline]
    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }
}

/// Free-function form of [`TimeInterval::intersect`].
pub fn interval_intersect(a: &TimeInterval, b: &TimeInterval) -> Option<TimeInterval> {
    a.intersect(b)
}

/// Total length of the union of a set of intervals.
pub fn union_length(intervals: &[TimeInterval]) -> f64 {
    merge_intervals(intervals).iter().map(TimeInterval::duration).fold(0.0, |acc, d| acc + d)
}

/// Sorts and coalesces overlapping or touching intervals.
pub fn merge_intervals(intervals: &[TimeInterval]) -> Vec<TimeInterval> {
    let mut sorted = intervals.to_vec();
    sorted.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end)));
    let mut out: Vec<TimeInterval> = Vec::with_capacity(sorted.len());
    for iv in sorted {
        match out.last_mut() {
            Some(last) if iv.start <= last.end => last.end = last.end.max(iv.end),
            _ => out.push(iv),
        }
    }
    out
}

/// Point in image-normalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormPoint {
    pub x: f64,
    pub y: f64,
}

impl NormPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y) {
            Ok(Self { x, y })
        } else {
            Err(Error::InvalidValue(format!("point ({x}, {y}) outside the unit square")))
        }
    }

    /// Projects onto the unit square. Non-finite coordinates map to 0.
    pub fn clamped(x: f64, y: f64) -> Self {
        let c = |v: f64| if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
        Self { x: c(x), y: c(y) }
    }

    pub fn distance(&self, other: &NormPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(&self, other: &NormPoint) -> NormPoint {
        NormPoint {
            x: 0.5 * (self.x + other.x),
            y: 0.5 * (self.y + other.y),
        }
    }
}

/// Axis-aligned box stored by center and extent, always inside the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub center: NormPoint,
    pub width: f64,
    pub height: f64,
}

impl BoundingBox {
    /// Builds a box from `[cx, cy, w, h]`, clipping it to the unit square.
    pub fn from_cxcywh(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        if ![cx, cy, w, h].iter().all(|v| v.is_finite()) || w <= 0.0 || h <= 0.0 {
            return Err(Error::InvalidValue(format!("box [{cx}, {cy}, {w}, {h}] is degenerate")));
        }
        let x0 = (cx - 0.5 * w).clamp(0.0, 1.0);
        let x1 = (cx + 0.5 * w).clamp(0.0, 1.0);
        let y0 = (cy - 0.5 * h).clamp(0.0, 1.0);
        let y1 = (cy + 0.5 * h).clamp(0.0, 1.0);
        if x1 <= x0 || y1 <= y0 {
            return Err(Error::InvalidValue(format!("box [{cx}, {cy}, {w}, {h}] lies outside the frame")));
        }
        Ok(Self {
            center: NormPoint {
                x: 0.5 * (x0 + x1),
                y: 0.5 * (y0 + y1),
            },
            width: x1 - x0,
            height: y1 - y0,
        })
    }

    pub fn left(&self) -> f64 {
        self.center.x - 0.5 * self.width
    }
    pub fn right(&self) -> f64 {
        self.center.x + 0.5 * self.width
    }
    pub fn top(&self) -> f64 {
        self.center.y - 0.5 * self.height
    }
    pub fn bottom(&self) -> f64 {
        self.center.y + 0.5 * self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn bottom_center(&self) -> NormPoint {
        NormPoint::clamped(self.center.x, self.bottom())
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let w = (self.right().min(other.right()) - self.left().max(other.left())).max(0.0);
        let h = (self.bottom().min(other.bottom()) - self.top().max(other.top())).max(0.0);
        let inter = w * h;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

/// COCO-17 joint order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(usize)]
pub enum Joint {
    Nose = 0,
    LeftEye,
    RightEye,
    LeftEar,
    RightEar,
    LeftShoulder,
    RightShoulder,
    LeftElbow,
    RightElbow,
    LeftWrist,
    RightWrist,
    LeftHip,
    RightHip,
    LeftKnee,
    RightKnee,
    LeftAnkle,
    RightAnkle,
}

pub const JOINT_COUNT: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub point: NormPoint,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseKeypoints {
    joints: Vec<Keypoint>,
}

impl PoseKeypoints {
    pub fn new(joints: Vec<Keypoint>) -> Result<Self> {
        if joints.len() != JOINT_COUNT {
            return Err(Error::InvalidValue(format!(
                "pose has {} keypoints, expected {JOINT_COUNT}",
                joints.len()
            )));
        }
        if let Some(k) = joints.iter().find(|k| !(0.0..=1.0).contains(&k.confidence)) {
            return Err(Error::InvalidValue(format!("keypoint confidence {} outside [0, 1]", k.confidence)));
        }
        Ok(Self { joints })
    }

    pub fn get(&self, joint: Joint) -> &Keypoint {
        &self.joints[joint as usize]
    }

    pub fn joints(&self) -> &[Keypoint] {
        &self.joints
    }

    /// The joint position, if its confidence reaches `threshold`.
    pub fn usable(&self, joint: Joint, threshold: f64) -> Option<NormPoint> {
        let k = self.get(joint);
        (k.confidence >= threshold).then_some(k.point)
    }

    /// Returns a copy with every joint shifted horizontally, clamped to the frame.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        let joints = self
            .joints
            .iter()
            .map(|k| Keypoint {
                point: NormPoint::clamped(k.point.x + dx, k.point.y + dy),
                confidence: k.confidence,
            })
            .collect();
        Self { joints }
    }
}

/// Ground-contact position of a person: midpoint of the usable ankles, or
/// the bottom-center of the box when no ankle is usable.
pub fn foot_anchor(
    pose: Option<&PoseKeypoints>,
    bbox: Option<&BoundingBox>,
    visibility_threshold: f64,
) -> Result<NormPoint> {
    if let Some(pose) = pose {
        let left = pose.usable(Joint::LeftAnkle, visibility_threshold);
        let right = pose.usable(Joint::RightAnkle, visibility_threshold);
        match (left, right) {
            (Some(l), Some(r)) => return Ok(l.midpoint(&r)),
            (Some(p), None) | (None, Some(p)) => return Ok(p),
            (None, None) => {}
        }
    }
    bbox.map(BoundingBox::bottom_center).ok_or(Error::NoAnchor)
}
