//! Single-teacher tracking over per-frame person detections.
//!
//! The teacher is picked in the first frame that contains anyone, then
//! followed with motion-gated optimal matching. Everyone else becomes a
//! student track and their detector ids enter a registry the teacher may
//! never be matched to. A teacher that goes unseen near a frame edge is
//! marked as exited and re-acquired by the next unregistered person to
//! appear at an edge.

mod assignment;

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

pub use assignment::{gated_assignment, matching_objective, FORBIDDEN};

use crate::error::{Error, Result};
use crate::ingest::{FrameDetections, PersonDetection};
use crate::model::{foot_anchor, BoundingBox, NormPoint, TimeInterval, DEFAULT_VISIBILITY_THRESHOLD};

/// Which extreme of the foot anchor's image `y` marks the teacher in the
/// first frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeacherSelect {
    /// Smallest `y`: nearest the top of the image (front of the room).
    #[default]
    TopY,
    BottomY,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingParams {
    /// Capacity of the per-track position history.
    pub history_len: usize,
    /// Distance (normalized units) at which the motion term saturates.
    pub match_radius: f64,
    /// Pairs costing more than this are never matched.
    pub max_cost: f64,
    /// Seconds a teacher must go unmatched near an edge before exiting.
    pub exit_after: f64,
    /// Width of the frame border counted as "near an edge".
    pub edge_margin: f64,
    pub teacher_select: TeacherSelect,
    pub visibility_threshold: f64,
    /// Student tracks unmatched this long are dropped (their ids stay registered).
    pub student_max_age: f64,
}

impl Default for TrackingParams {
    fn default() -> Self {
        Self {
            history_len: 90,
            match_radius: 0.15,
            max_cost: 0.7,
            exit_after: 5.0,
            edge_margin: 0.05,
            teacher_select: TeacherSelect::TopY,
            visibility_threshold: DEFAULT_VISIBILITY_THRESHOLD,
            student_max_age: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Teacher,
    Student,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackStatus {
    Active,
    Exited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackState {
    pub track_id: u64,
    /// Upstream detector id of the most recent matched detection.
    pub detection_id: i64,
    pub last_box: BoundingBox,
    pub last_anchor: NormPoint,
    pub last_seen: f64,
    pub history: VecDeque<(f64, NormPoint)>,
    pub role: Role,
    pub status: TrackStatus,
}

impl TrackState {
    fn new(track_id: u64, det: &Candidate, now: f64, role: Role) -> Self {
        let mut history = VecDeque::new();
        history.push_back((now, det.anchor));
        Self {
            track_id,
            detection_id: det.detection_id,
            last_box: det.bbox,
            last_anchor: det.anchor,
            last_seen: now,
            history,
            role,
            status: TrackStatus::Active,
        }
    }

    fn observe(&mut self, det: &Candidate, now: f64, capacity: usize) {
        self.detection_id = det.detection_id;
        self.last_box = det.bbox;
        self.last_anchor = det.anchor;
        self.last_seen = now;
        self.history.push_back((now, det.anchor));
        while self.history.len() > capacity.max(1) {
            self.history.pop_front();
        }
    }

    /// Last anchor extrapolated to `now` with the velocity of the two most
    /// recent history points.
    pub fn predicted_anchor(&self, now: f64) -> NormPoint {
        let n = self.history.len();
        if n < 2 {
            return self.last_anchor;
        }
        let (t0, p0) = self.history[n - 2];
        let (t1, p1) = self.history[n - 1];
        if t1 <= t0 {
            return self.last_anchor;
        }
        let dt = now - self.last_seen;
        let vx = (p1.x - p0.x) / (t1 - t0);
        let vy = (p1.y - p0.y) / (t1 - t0);
        NormPoint::clamped(self.last_anchor.x + vx * dt, self.last_anchor.y + vy * dt)
    }
}

/// Detector ids ever confirmed as students.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StudentRegistry {
    ids: BTreeSet<i64>,
}

impl StudentRegistry {
    pub fn contains(&self, id: i64) -> bool {
        self.ids.contains(&id)
    }
    pub fn insert(&mut self, id: i64) {
        self.ids.insert(id);
    }
    pub fn len(&self) -> usize {
        self.ids.len()
    }
    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
    pub fn ids(&self) -> impl Iterator<Item = i64> + '_ {
        self.ids.iter().copied()
    }
}

/// One teacher position. `matched` is false when the teacher was active
/// but not detected and the last position was held.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub time: f64,
    pub point: NormPoint,
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherTrack {
    pub track_id: u64,
    pub samples: Vec<TrackSample>,
    /// Periods the teacher was out of the room.
    pub exits: Vec<TimeInterval>,
}

impl TeacherTrack {
    pub fn empty() -> Self {
        Self {
            track_id: 0,
            samples: Vec::new(),
            exits: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackMatch {
    pub track_id: u64,
    pub detection_id: i64,
    pub role: Role,
}

/// Per-frame record of the association step, for inspection and testing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAssignment {
    pub frame_index: u64,
    pub time: f64,
    /// Track ids (rows) that took part in the matching.
    pub track_ids: Vec<u64>,
    /// Detection ids (columns), ascending.
    pub detection_ids: Vec<i64>,
    /// Pair costs; `None` marks a forbidden pair.
    pub costs: Vec<Vec<Option<f64>>>,
    pub matches: Vec<TrackMatch>,
    pub teacher_detection: Option<i64>,
    pub teacher_status: Option<TrackStatus>,
}

impl FrameAssignment {
    pub fn cost_matrix(&self) -> Vec<Vec<f64>> {
        self.costs
            .iter()
            .map(|row| row.iter().map(|c| c.unwrap_or(FORBIDDEN)).collect())
            .collect()
    }

    /// The solver's choice, as a column index per row.
    pub fn row_assignment(&self) -> Vec<Option<usize>> {
        self.track_ids
            .iter()
            .map(|tid| {
                self.matches
                    .iter()
                    .find(|m| m.track_id == *tid)
                    .and_then(|m| self.detection_ids.iter().position(|d| *d == m.detection_id))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingOutput {
    pub track: TeacherTrack,
    pub registry: StudentRegistry,
    pub frames: Vec<FrameAssignment>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    detection_id: i64,
    bbox: BoundingBox,
    anchor: NormPoint,
}

fn candidates(frame: &FrameDetections, params: &TrackingParams) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = frame
        .persons
        .iter()
        .map(|p| Candidate {
            detection_id: p.detection_id,
            bbox: p.bbox,
            anchor: anchor_of(p, params.visibility_threshold),
        })
        .collect();
    out.sort_by_key(|c| c.detection_id);
    out
}

fn anchor_of(p: &PersonDetection, threshold: f64) -> NormPoint {
    // The box is always present, so the fallback cannot fail.
    foot_anchor(p.pose.as_ref(), Some(&p.bbox), threshold).unwrap_or_else(|_| p.bbox.bottom_center())
}

/// Picks the teacher among the persons of one frame: extremal anchor `y`
/// per `mode`, ties broken by smaller `x` and then lower detection id.
pub fn select_initial_teacher(frame: &FrameDetections, mode: TeacherSelect, visibility_threshold: f64) -> Result<i64> {
    frame
        .persons
        .iter()
        .map(|p| (p.detection_id, anchor_of(p, visibility_threshold)))
        .min_by(|(ida, a), (idb, b)| {
            let by_y = match mode {
                TeacherSelect::TopY => a.y.total_cmp(&b.y),
                TeacherSelect::BottomY => b.y.total_cmp(&a.y),
            };
            by_y.then(a.x.total_cmp(&b.x)).then(ida.cmp(idb))
        })
        .map(|(id, _)| id)
        .ok_or(Error::TeacherNeverDetected)
}

/// Association cost between a track and a detection at time `now`.
pub fn association_cost(track: &TrackState, bbox: &BoundingBox, anchor: &NormPoint, now: f64, radius: f64) -> f64 {
    let iou = track.last_box.iou(bbox);
    let dist = track.predicted_anchor(now).distance(anchor);
    0.5 * (1.0 - iou) + 0.5 * (dist / radius).min(1.0)
}

fn near_edge(p: &NormPoint, margin: f64) -> bool {
    p.x <= margin || p.x >= 1.0 - margin || p.y <= margin || p.y >= 1.0 - margin
}

/// Marks an active teacher as exited once it has gone unmatched for
/// `exit_after` seconds with its last position near a frame edge.
pub fn update_exit_state(teacher: &TrackState, now: f64, params: &TrackingParams) -> TrackState {
    let mut next = teacher.clone();
    if next.status == TrackStatus::Active
        && now - next.last_seen >= params.exit_after
        && near_edge(&next.last_anchor, params.edge_margin)
    {
        next.status = TrackStatus::Exited;
    }
    next
}

/// Frame-by-frame tracker state machine.
#[derive(Debug, Clone)]
pub struct Tracker {
    params: TrackingParams,
    tracks: Vec<TrackState>,
    registry: StudentRegistry,
    next_track_id: u64,
    teacher: Option<usize>,
    samples: Vec<TrackSample>,
    exits: Vec<TimeInterval>,
    exit_start: Option<f64>,
    last_time: f64,
}

impl Tracker {
    pub fn new(params: TrackingParams) -> Self {
        Self {
            params,
            tracks: Vec::new(),
            registry: StudentRegistry::default(),
            next_track_id: 1,
            teacher: None,
            samples: Vec::new(),
            exits: Vec::new(),
            exit_start: None,
            last_time: 0.0,
        }
    }

    pub fn teacher(&self) -> Option<&TrackState> {
        self.teacher.map(|i| &self.tracks[i])
    }

    pub fn tracks(&self) -> &[TrackState] {
        &self.tracks
    }

    pub fn registry(&self) -> &StudentRegistry {
        &self.registry
    }

    fn spawn(&mut self, det: &Candidate, now: f64, role: Role) -> usize {
        let id = self.next_track_id;
        self.next_track_id += 1;
        self.tracks.push(TrackState::new(id, det, now, role));
        self.tracks.len() - 1
    }

    /// Processes one frame and reports what was matched.
    pub fn step(&mut self, frame: &FrameDetections) -> FrameAssignment {
        let now = frame.timestamp.secs();
        self.last_time = now;
        let dets = candidates(frame, &self.params);
        let mut record = FrameAssignment {
            frame_index: frame.frame_index,
            time: now,
            track_ids: Vec::new(),
            detection_ids: dets.iter().map(|d| d.detection_id).collect(),
            costs: Vec::new(),
            matches: Vec::new(),
            teacher_detection: None,
            teacher_status: None,
        };

        let Some(teacher_idx) = self.teacher else {
            if let Ok(tid) = select_initial_teacher(frame, self.params.teacher_select, self.params.visibility_threshold) {
                for d in &dets {
                    let role = if d.detection_id == tid { Role::Teacher } else { Role::Student };
                    let idx = self.spawn(d, now, role);
                    if role == Role::Teacher {
                        self.teacher = Some(idx);
                    } else {
                        self.registry.insert(d.detection_id);
                    }
                    record.matches.push(TrackMatch {
                        track_id: self.tracks[idx].track_id,
                        detection_id: d.detection_id,
                        role,
                    });
                }
                self.emit_sample(now, true);
                self.fill_teacher_fields(&mut record, Some(tid));
            }
            return record;
        };

        let rows: Vec<usize> = (0..self.tracks.len())
            .filter(|&i| self.tracks[i].status == TrackStatus::Active)
            .collect();
        let costs: Vec<Vec<f64>> = rows
            .iter()
            .map(|&i| {
                let t = &self.tracks[i];
                dets.iter()
                    .map(|d| {
                        if t.role == Role::Teacher && self.registry.contains(d.detection_id) {
                            FORBIDDEN
                        } else {
                            association_cost(t, &d.bbox, &d.anchor, now, self.params.match_radius)
                        }
                    })
                    .collect()
            })
            .collect();
        let assignment = gated_assignment(&costs, self.params.max_cost);

        record.track_ids = rows.iter().map(|&i| self.tracks[i].track_id).collect();
        record.costs = costs
            .iter()
            .map(|r| r.iter().map(|c| c.is_finite().then_some(*c)).collect())
            .collect();

        let mut det_used = vec![false; dets.len()];
        let mut teacher_det: Option<usize> = None;
        for (row, col) in rows.iter().zip(&assignment) {
            if let Some(j) = *col {
                det_used[j] = true;
                if *row == teacher_idx {
                    teacher_det = Some(j);
                }
                let cap = self.params.history_len;
                self.tracks[*row].observe(&dets[j], now, cap);
                record.matches.push(TrackMatch {
                    track_id: self.tracks[*row].track_id,
                    detection_id: dets[j].detection_id,
                    role: self.tracks[*row].role,
                });
            }
        }

        // Detector id continuity: a teacher left unmatched keeps its own id.
        if teacher_det.is_none() && self.tracks[teacher_idx].status == TrackStatus::Active {
            let own = self.tracks[teacher_idx].detection_id;
            if let Some(j) = (0..dets.len()).find(|&j| !det_used[j] && dets[j].detection_id == own) {
                teacher_det = Some(self.claim_for_teacher(teacher_idx, &dets, j, now, &mut det_used, &mut record));
            }
        }

        if teacher_det.is_none() {
            let before = self.tracks[teacher_idx].status;
            let updated = update_exit_state(&self.tracks[teacher_idx], now, &self.params);
            if before == TrackStatus::Active && updated.status == TrackStatus::Exited {
                let left_at = updated.last_seen;
                self.samples.retain(|s| s.time <= left_at);
                self.exit_start = Some(left_at);
            }
            self.tracks[teacher_idx] = updated;
        }

        if self.tracks[teacher_idx].status == TrackStatus::Exited {
            let own = self.tracks[teacher_idx].detection_id;
            let pick = (0..dets.len())
                .find(|&j| !det_used[j] && dets[j].detection_id == own)
                .or_else(|| {
                    (0..dets.len()).find(|&j| {
                        !det_used[j]
                            && !self.registry.contains(dets[j].detection_id)
                            && near_edge(&dets[j].anchor, self.params.edge_margin)
                    })
                });
            if let Some(j) = pick {
                let t = &mut self.tracks[teacher_idx];
                t.history.clear();
                t.status = TrackStatus::Active;
                teacher_det = Some(self.claim_for_teacher(teacher_idx, &dets, j, now, &mut det_used, &mut record));
                if let Some(start) = self.exit_start.take() {
                    self.exits.push(TimeInterval { start, end: now });
                }
            }
        }

        let teacher_id_now = self.tracks[teacher_idx].detection_id;
        for (j, d) in dets.iter().enumerate() {
            if det_used[j] {
                continue;
            }
            let idx = self.spawn(d, now, Role::Student);
            if d.detection_id != teacher_id_now {
                self.registry.insert(d.detection_id);
            }
            record.matches.push(TrackMatch {
                track_id: self.tracks[idx].track_id,
                detection_id: d.detection_id,
                role: Role::Student,
            });
        }

        self.prune_students(now);
        debug_assert!(!self.registry.contains(self.teacher().map_or(i64::MIN, |t| t.detection_id)));

        let teacher = &self.tracks[self.teacher.unwrap_or(teacher_idx)];
        if teacher.status == TrackStatus::Active {
            self.emit_sample(now, teacher_det.is_some());
        }
        let tdet = teacher_det.map(|j| dets[j].detection_id);
        self.fill_teacher_fields(&mut record, tdet);
        record
    }

    fn claim_for_teacher(
        &mut self,
        teacher_idx: usize,
        dets: &[Candidate],
        j: usize,
        now: f64,
        det_used: &mut [bool],
        record: &mut FrameAssignment,
    ) -> usize {
        det_used[j] = true;
        let cap = self.params.history_len;
        let t = &mut self.tracks[teacher_idx];
        t.observe(&dets[j], now, cap);
        record.matches.push(TrackMatch {
            track_id: t.track_id,
            detection_id: dets[j].detection_id,
            role: Role::Teacher,
        });
        j
    }

    fn prune_students(&mut self, now: f64) {
        let max_age = self.params.student_max_age;
        let teacher_id = self.teacher.map(|i| self.tracks[i].track_id);
        self.tracks
            .retain(|t| Some(t.track_id) == teacher_id || now - t.last_seen < max_age);
        self.teacher = teacher_id.and_then(|id| self.tracks.iter().position(|t| t.track_id == id));
    }

    fn emit_sample(&mut self, now: f64, matched: bool) {
        if let Some(t) = self.teacher() {
            let point = t.last_anchor;
            self.samples.push(TrackSample { time: now, point, matched });
        }
    }

    fn fill_teacher_fields(&self, record: &mut FrameAssignment, det: Option<i64>) {
        record.teacher_detection = det;
        record.teacher_status = self.teacher().map(|t| t.status);
    }

    pub fn finish(mut self) -> (TeacherTrack, StudentRegistry) {
        if let Some(start) = self.exit_start.take() {
            self.exits.push(TimeInterval {
                start,
                end: self.last_time.max(start),
            });
        }
        let track_id = self.teacher().map_or(0, |t| t.track_id);
        (
            TeacherTrack {
                track_id,
                samples: self.samples,
                exits: self.exits,
            },
            self.registry,
        )
    }
}

/// Runs the tracker over a whole detection stream.
pub fn build_teacher_track(frames: &[FrameDetections], params: &TrackingParams) -> Result<TrackingOutput> {
    if !frames.iter().any(|f| !f.persons.is_empty()) {
        return Err(Error::TeacherNeverDetected);
    }
    let mut tracker = Tracker::new(params.clone());
    let records = frames.iter().map(|f| tracker.step(f)).collect();
    let (track, registry) = tracker.finish();
    Ok(TrackingOutput {
        track,
        registry,
        frames: records,
    })
}
