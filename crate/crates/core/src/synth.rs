//! Seeded synthetic sessions with ground truth, used as test fixtures.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::actions::ActionKind;
use crate::analytics::to_canonical_string;
use crate::ingest::{format_annotations, AnnotationSource, AudioClip, RawAnnotation, SessionManifest, StreamPaths, StyleClass, Zone, MANIFEST_FILE};
use crate::model::TimeInterval;
use crate::{Error, Result};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const DETECTIONS_FILE: &str = "detections.jsonl";
pub const AUDIO_FILE: &str = "audio.wav";
pub const ANNOTATIONS_FILE: &str = "annotations.tsv";
pub const MODEL_ACTIONS_FILE: &str = "model_actions.tsv";
pub const LUMA_FILE: &str = "screen_luma.tsv";
pub const SYNTH_FPS: f64 = 10.0;
pub const SYNTH_SAMPLE_RATE: u32 = 16_000;
pub const DEFAULT_SEED: u64 = 7;

const POSITION_NOISE: f64 = 0.002;
const NOISE_RMS: f64 = 0.001;
const TEACHER_BOX: (f64, f64) = (0.08, 0.30);
const STUDENT_BOX: (f64, f64) = (0.07, 0.20);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Stationary,
    Crossing,
    ExitReentry,
    LectureAudio,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Stationary, Scenario::Crossing, Scenario::ExitReentry, Scenario::LectureAudio];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Stationary => "stationary",
            Scenario::Crossing => "crossing",
            Scenario::ExitReentry => "exit_reentry",
            Scenario::LectureAudio => "lecture_audio",
        }
    }

    pub fn duration(self) -> f64 {
        match self {
            Scenario::LectureAudio => 130.0,
            _ => 60.0,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidValue(format!("unknown scenario '{s}' (expected stationary, crossing, exit_reentry or lecture_audio)")))
    }
}

/// A generated tone burst and whether segmentation must keep it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Burst {
    pub start: f64,
    pub end: f64,
    /// Long enough to survive as an utterance.
    pub expected: bool,
    pub syllables: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub scenario: Scenario,
    pub seed: u64,
    pub fps: f64,
    pub duration: f64,
    /// Detector id of the teacher in each frame, `None` while absent.
    pub teacher_ids: Vec<Option<i64>>,
    pub exits: Vec<TimeInterval>,
    pub bursts: Vec<Burst>,
    pub hand_waves: Vec<TimeInterval>,
    pub slide_changes: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Person {
    id: i64,
    cx: f64,
    anchor_y: f64,
    size: (f64, f64),
    /// Time-varying horizontal wrist offset for a raised right hand.
    wave: Option<f64>,
}

fn keypoints(p: &Person, top: f64, bottom: f64) -> Vec<[f64; 3]> {
    let (w, h) = (p.size.0, bottom - top);
    let c = |v: f64| v.clamp(0.0, 1.0);
    let mut kps = vec![
        [p.cx, top + 0.08 * h],
        [p.cx - 0.05 * w, top + 0.06 * h],
        [p.cx + 0.05 * w, top + 0.06 * h],
        [p.cx - 0.1 * w, top + 0.07 * h],
        [p.cx + 0.1 * w, top + 0.07 * h],
        [p.cx - 0.25 * w, top + 0.2 * h],
        [p.cx + 0.25 * w, top + 0.2 * h],
        [p.cx - 0.3 * w, top + 0.35 * h],
        [p.cx + 0.3 * w, top + 0.35 * h],
        [p.cx - 0.3 * w, top + 0.5 * h],
        [p.cx + 0.3 * w, top + 0.5 * h],
        [p.cx - 0.15 * w, top + 0.55 * h],
        [p.cx + 0.15 * w, top + 0.55 * h],
        [p.cx - 0.15 * w, top + 0.75 * h],
        [p.cx + 0.15 * w, top + 0.75 * h],
        [p.cx - 0.12 * w, p.anchor_y],
        [p.cx + 0.12 * w, p.anchor_y],
    ];
    if let Some(dx) = p.wave {
        kps[8] = [p.cx + 0.4 * w + 0.5 * dx, top + 0.1 * h];
        kps[10] = [p.cx + 0.4 * w + dx, top + 0.02 * h];
    }
    kps.into_iter().map(|[x, y]| [c(x), c(y), 0.9]).collect()
}

fn person_json(p: &Person, rng: &mut ChaCha8Rng, noise: &Normal<f64>) -> serde_json::Value {
    let p = Person {
        cx: (p.cx + noise.sample(rng)).clamp(0.0, 1.0),
        anchor_y: (p.anchor_y + noise.sample(rng)).clamp(0.0, 1.0),
        ..*p
    };
    let (w, h) = p.size;
    let bottom = p.anchor_y + 0.01 * h;
    let top = bottom - h;
    json!({
        "id": p.id,
        "box": [p.cx, 0.5 * (top + bottom), w, h],
        "kps": keypoints(&p, top, bottom),
        "conf": 0.9,
    })
}

fn seated_students(count: usize, first_id: i64) -> Vec<Person> {
    (0..count)
        .map(|i| Person {
            id: first_id + i as i64,
            cx: 0.15 + 0.7 * i as f64 / (count.max(2) - 1) as f64,
            anchor_y: 0.8 + 0.06 * (i % 2) as f64,
            size: STUDENT_BOX,
            wave: None,
        })
        .collect()
}

struct Motion {
    frames: Vec<serde_json::Value>,
    teacher_ids: Vec<Option<i64>>,
    exits: Vec<TimeInterval>,
    hand_waves: Vec<TimeInterval>,
}

fn teacher(id: i64, cx: f64, anchor_y: f64) -> Person {
    Person { id, cx, anchor_y, size: TEACHER_BOX, wave: None }
}

fn motion(scenario: Scenario, duration: f64, rng: &mut ChaCha8Rng) -> Motion {
    let noise = Normal::new(0.0, POSITION_NOISE).expect("positive deviation");
    let n = (duration * SYNTH_FPS).round() as usize;
    let students = seated_students(4, 20);
    let mut frames = Vec::with_capacity(n);
    let mut teacher_ids = Vec::with_capacity(n);
    let mut exits = Vec::new();
    let mut hand_waves = Vec::new();
    let wave = TimeInterval { start: 20.0, end: 24.0 };
    if scenario == Scenario::Stationary {
        hand_waves.push(wave);
    }
    for i in 0..n {
        let t = i as f64 / SYNTH_FPS;
        let mut people: Vec<Person> = Vec::new();
        let mut tid = Some(1);
        match scenario {
            Scenario::Stationary | Scenario::LectureAudio => {
                let mut p = teacher(1, 0.5 + 0.1 * (2.0 * std::f64::consts::PI * t / 40.0).sin(), 0.3);
                if scenario == Scenario::Stationary {
                    p.cx = 0.5;
                    if t >= wave.start && t <= wave.end {
                        p.wave = Some(0.04 * (2.0 * std::f64::consts::PI * 1.5 * t).sin());
                    }
                }
                people.push(p);
            }
            Scenario::Crossing => {
                // Teacher and a second walker pass each other twice.
                let phase = (2.0 * std::f64::consts::PI * t / 30.0).sin();
                people.push(teacher(1, 0.5 - 0.35 * phase, 0.30));
                people.push(Person { id: 2, cx: 0.5 + 0.35 * phase, anchor_y: 0.40, size: TEACHER_BOX, wave: None });
            }
            Scenario::ExitReentry => {
                let (away_from, back_at) = (10.0, 18.0);
                if t < away_from {
                    people.push(teacher(1, 0.5 + 0.47 * t / 9.9, 0.3));
                } else if t < back_at {
                    tid = None;
                } else {
                    let x = (0.97 - 0.05 * (t - back_at)).max(0.3);
                    people.push(teacher(9, x, 0.3));
                    tid = Some(9);
                }
            }
        }
        people.extend(students.iter().copied());
        let mut persons: Vec<serde_json::Value> = people.iter().map(|p| person_json(p, rng, &noise)).collect();
        // Detector output order carries no meaning.
        for k in (1..persons.len()).rev() {
            persons.swap(k, rng.random_range(0..=k));
        }
        frames.push(json!({"frame": i, "persons": persons}));
        teacher_ids.push(tid);
    }
    if scenario == Scenario::ExitReentry {
        exits.push(TimeInterval { start: 99.0 / SYNTH_FPS, end: 18.0 });
    }
    Motion { frames, teacher_ids, exits, hand_waves }
}

/// Lecture-like audio: harmonic syllable trains with gliding pitch, short
/// clicks that must be rejected, and low-level noise elsewhere.
pub fn lecture_audio(duration: f64, seed: u64) -> (AudioClip, Vec<Burst>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA0D1);
    let rate = f64::from(SYNTH_SAMPLE_RATE);
    let n = (duration * rate).round() as usize;
    let noise = Normal::new(0.0, NOISE_RMS).expect("positive deviation");
    let mut x: Vec<f64> = (0..n).map(|_| noise.sample(&mut rng)).collect();
    let mut bursts = Vec::new();
    let mut t = 0.5;
    loop {
        let short = rng.random_bool(0.2);
        let len = if short { rng.random_range(0.04..0.10) } else { rng.random_range(0.15..3.0) };
        if t + len + 0.5 > duration {
            break;
        }
        let syllables = if short { 0 } else { ((len * 4.0).round() as usize).max(1) };
        let f0 = rng.random_range(110.0..210.0);
        let gain = rng.random_range(0.25..0.5);
        let s0 = (t * rate).round() as usize;
        let s1 = ((t + len) * rate).round() as usize;
        let ramp = 0.005 * rate;
        let mut phase = 0.0;
        for (k, v) in x[s0..s1].iter_mut().enumerate() {
            let tau = k as f64 / rate;
            let edge = ((k as f64 + 1.0) / ramp).min((s1 - s0 - k) as f64 / ramp).min(1.0);
            let syll = if syllables > 0 {
                0.55 - 0.45 * (2.0 * std::f64::consts::PI * syllables as f64 * tau / len).cos()
            } else {
                1.0
            };
            let f = f0 * (1.0 + 0.08 * (2.0 * std::f64::consts::PI * 0.7 * tau).sin());
            phase += 2.0 * std::f64::consts::PI * f / rate;
            let tone: f64 = (1..=6).map(|h| (h as f64 * phase).sin() / h as f64).sum();
            *v += gain * edge * syll * tone / 2.45;
        }
        bursts.push(Burst {
            start: s0 as f64 / rate,
            end: s1 as f64 / rate,
            expected: !short,
            syllables,
        });
        // Pauses long enough that neighbouring bursts never merge.
        t += len + if rng.random_bool(0.1) { rng.random_range(3.0..8.0) } else { rng.random_range(0.35..1.5) };
    }
    for v in &mut x {
        *v = v.clamp(-1.0, 1.0);
    }
    (AudioClip::new(SYNTH_SAMPLE_RATE, x).expect("valid synthetic clip"), bursts)
}

fn zones() -> Vec<Zone> {
    vec![
        Zone { name: "board".into(), polygon: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.38], [0.0, 0.38]] },
        Zone { name: "students".into(), polygon: vec![[0.0, 0.55], [1.0, 0.55], [1.0, 1.0], [0.0, 1.0]] },
    ]
}

fn annotation(start: f64, end: f64, label: &str, source: AnnotationSource) -> RawAnnotation {
    RawAnnotation { interval: TimeInterval { start, end }, label: label.into(), source }
}

/// Writes a complete synthetic session into `dir` and returns its ground truth.
pub fn generate(scenario: Scenario, seed: u64, dir: &Path) -> Result<GroundTruth> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let duration = scenario.duration();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = motion(scenario, duration, &mut rng);
    let (clip, bursts) = lecture_audio(duration, seed);

    let write = |name: &str, text: &str| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    };
    let mut det = String::new();
    for f in &m.frames {
        det.push_str(&serde_json::to_string(f)?);
        det.push('\n');
    }
    write(DETECTIONS_FILE, &det)?;
    clip.write_wav16(&dir.join(AUDIO_FILE))?;

    let third = duration / 3.0;
    let manual = vec![
        annotation(0.0, third, "lecture", AnnotationSource::Manual),
        annotation(2.0, 0.5 * third, "writing on board", AnnotationSource::Manual),
        annotation(third, 2.0 * third, "discussion", AnnotationSource::Manual),
        annotation(2.0 * third, duration, "lecture", AnnotationSource::Manual),
    ];
    write(ANNOTATIONS_FILE, &format!("# start\tend\tlabel\n{}", format_annotations(&manual)))?;
    let model = vec![
        annotation(5.0, 9.0, "pointing", AnnotationSource::Model),
        annotation(9.3, 12.0, "pointing", AnnotationSource::Model),
        annotation(30.0, 33.5, "gesturing at board", AnnotationSource::Model),
    ];
    write(MODEL_ACTIONS_FILE, &format_annotations(&model))?;

    let slide_changes: Vec<f64> = (1..).map(|k| k as f64 * 20.0).take_while(|t| *t < duration).collect();
    let mut luma = String::new();
    let steps = (duration * 2.0) as usize;
    for k in 0..=steps {
        let t = k as f64 * 0.5;
        let slide = slide_changes.iter().filter(|c| **c <= t).count();
        let level = if slide % 2 == 0 { 0.8 } else { 0.55 };
        luma.push_str(&format!("{t}\t{level}\n"));
    }
    write(LUMA_FILE, &luma)?;

    let manifest = SessionManifest {
        session_id: format!("synth-{}-{seed}", scenario.name()),
        fps: SYNTH_FPS,
        duration,
        media_path: AUDIO_FILE.into(),
        streams: StreamPaths {
            detections: DETECTIONS_FILE.into(),
            audio: AUDIO_FILE.into(),
            annotations: Some(ANNOTATIONS_FILE.into()),
            model_actions: Some(MODEL_ACTIONS_FILE.into()),
            screen_luma: Some(LUMA_FILE.into()),
        },
        zones: zones(),
        style_map: BTreeMap::from([
            ("lecture".to_string(), StyleClass::Passive),
            ("discussion".to_string(), StyleClass::Active),
        ]),
        label_map: BTreeMap::from([
            ("writing on board".to_string(), ActionKind::WritingOnBoard),
            ("pointing".to_string(), ActionKind::PointingAtBoard),
            ("gesturing at board".to_string(), ActionKind::GesturingAtBoard),
        ]),
        scoring_features: None,
    };
    write(MANIFEST_FILE, &to_canonical_string(&manifest)?)?;

    let truth = GroundTruth {
        scenario,
        seed,
        fps: SYNTH_FPS,
        duration,
        teacher_ids: m.teacher_ids,
        exits: m.exits,
        bursts,
        hand_waves: m.hand_waves,
        slide_changes,
    };
    write(GROUND_TRUTH_FILE, &to_canonical_string(&truth)?)?;
    Ok(truth)
}

pub fn load_ground_truth(dir: &Path) -> Result<GroundTruth> {
    let path = dir.join(GROUND_TRUTH_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}
