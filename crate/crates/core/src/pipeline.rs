//! End-to-end analysis of one session directory.

use std::path::{Path, PathBuf};

use crate::actions::{detect_hand_wave, detect_slide_change, events_from_annotations, ingest_model_actions, merge_timeline, EventTimeline};
use crate::analytics::{compile_summary, to_canonical_string, MediaInfo, SessionSummary, SummaryInputs, SUMMARY_FILE, TIMELINE_FILE, WINDOWS_FILE};
use crate::config::AnalysisConfig;
use crate::ingest::{
    load_audio, load_manifest, read_manifest, parse_annotation_file, parse_detection_stream, parse_luma_file, AnnotationSource, FrameDetections, RawAnnotation,
    SessionManifest,
};
use crate::model::PoseKeypoints;
use crate::speech::{aggregate_windows, analyze_speech, windows_to_csv, WindowLevel};
use crate::tracking::{build_teacher_track, TrackingOutput};
use crate::{Error, Result};

pub const TRACKING_DUMP_FILE: &str = "tracking.json";

/// Everything one analysis run produces.
#[derive(Debug, Clone)]
pub struct SessionArtifacts {
    pub summary: SessionSummary,
    pub timeline: EventTimeline,
    pub windows_csv: String,
    pub tracking: TrackingOutput,
}

fn check_times_within(file: &Path, annotations: &[RawAnnotation], duration: f64) -> Result<()> {
    for (i, a) in annotations.iter().enumerate() {
        if a.interval.end > duration {
            return Err(Error::parse(
                file.display().to_string(),
                i + 1,
                format!("interval [{}, {}] extends past session end {duration}", a.interval.start, a.interval.end),
            ));
        }
    }
    Ok(())
}

fn load_annotations(manifest: &SessionManifest, dir: &Path, rel: Option<&String>, source: AnnotationSource) -> Result<Vec<RawAnnotation>> {
    let Some(rel) = rel else { return Ok(Vec::new()) };
    let path = manifest.resolve(dir, rel);
    let annotations = parse_annotation_file(&path, source)?;
    check_times_within(&path, &annotations, manifest.duration)?;
    Ok(annotations)
}

/// Teacher pose per frame, as selected by the tracker.
fn teacher_poses<'a>(frames: &'a [FrameDetections], tracking: &TrackingOutput) -> Vec<(f64, Option<&'a PoseKeypoints>)> {
    frames
        .iter()
        .zip(&tracking.frames)
        .map(|(f, rec)| {
            let pose = rec
                .teacher_detection
                .and_then(|id| f.persons.iter().find(|p| p.detection_id == id))
                .and_then(|p| p.pose.as_ref());
            (f.timestamp.secs(), pose)
        })
        .collect()
}

/// Runs the full analysis of the session in `dir` without writing anything.
pub fn analyze_session(dir: &Path, config: &AnalysisConfig) -> Result<SessionArtifacts> {
    config.validate()?;
    let manifest = load_manifest(dir)?;
    let det_path = manifest.resolve(dir, &manifest.streams.detections);
    let frames = parse_detection_stream(&det_path, manifest.fps)?;
    if let Some(f) = frames.iter().find(|f| f.timestamp.secs() > manifest.duration) {
        return Err(Error::parse(
            det_path.display().to_string(),
            frames.iter().position(|g| g.frame_index == f.frame_index).unwrap_or(0) + 1,
            format!("frame {} lies past session end {}", f.frame_index, manifest.duration),
        ));
    }
    let clip = load_audio(&manifest.resolve(dir, &manifest.streams.audio))?;
    let manual = load_annotations(&manifest, dir, manifest.streams.annotations.as_ref(), AnnotationSource::Manual)?;
    let model = load_annotations(&manifest, dir, manifest.streams.model_actions.as_ref(), AnnotationSource::Model)?;
    let luma = match &manifest.streams.screen_luma {
        Some(rel) => parse_luma_file(&manifest.resolve(dir, rel))?,
        None => Vec::new(),
    };

    let tracking = build_teacher_track(&frames, &config.tracking)?;

    // Labels that only carry a teaching-style class are not actions.
    let action_labels: Vec<RawAnnotation> = manual
        .iter()
        .filter(|a| manifest.label_map.contains_key(&a.label) || !manifest.style_map.contains_key(&a.label))
        .cloned()
        .collect();
    let timeline = merge_timeline(
        &manifest.session_id,
        vec![
            events_from_annotations(&action_labels, &manifest.label_map),
            ingest_model_actions(&model, &manifest.label_map),
            detect_hand_wave(&teacher_poses(&frames, &tracking), &config.actions.hand_wave),
            detect_slide_change(&luma, &config.actions.slide_change),
        ],
    );

    let speech = analyze_speech(&clip, &config.speech)?;
    let media_path = manifest.resolve(dir, &manifest.media_path);
    let summary = compile_summary(&SummaryInputs {
        manifest: &manifest,
        config,
        track: Some(&tracking.track),
        timeline: Some(&timeline),
        speech: Some(&speech),
        annotations: &manual,
        media: MediaInfo {
            path: manifest.media_path.clone(),
            available: media_path.is_file(),
        },
    })?;
    let fine = aggregate_windows(&speech, WindowLevel::Fine, config.windows.fine_seconds, &config.speech);
    let windows_csv = windows_to_csv(&fine, &config.speech);
    Ok(SessionArtifacts { summary, timeline, windows_csv, tracking })
}

/// Writes `summary.json`, `timeline.json`, `windows.csv` and, on request,
/// the per-frame tracking dump. Returns the written paths.
pub fn write_artifacts(artifacts: &SessionArtifacts, out: &Path, dump_tracking: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut files = vec![
        (out.join(SUMMARY_FILE), artifacts.summary.to_json()?),
        (out.join(TIMELINE_FILE), to_canonical_string(&artifacts.timeline)?),
        (out.join(WINDOWS_FILE), artifacts.windows_csv.clone()),
    ];
    if dump_tracking {
        files.push((out.join(TRACKING_DUMP_FILE), to_canonical_string(&artifacts.tracking)?));
    }
    for (path, text) in &files {
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

/// One input problem found by [`validate_session`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub file: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
    pub warnings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Lints the manifest, zone polygons and every referenced stream without
/// running the analysis.
pub fn validate_session(dir: &Path) -> ValidationReport {
    let mut report = ValidationReport::default();
    let manifest_file = crate::ingest::MANIFEST_FILE.to_string();
    let manifest = match read_manifest(dir) {
        Ok(m) => m,
        Err(e) => {
            report.findings.push(Finding { file: manifest_file, message: e.to_string() });
            return report;
        }
    };
    for message in manifest.problems(dir) {
        report.findings.push(Finding { file: manifest_file.clone(), message });
    }
    for message in manifest.warnings() {
        report.warnings.push(Finding { file: manifest_file.clone(), message });
    }
    let mut check = |rel: &str, result: Result<()>| {
        if let Err(e) = result {
            report.findings.push(Finding { file: rel.to_string(), message: e.to_string() });
        }
    };
    let s = &manifest.streams;
    if dir.join(&s.detections).is_file() && manifest.fps > 0.0 {
        check(&s.detections, parse_detection_stream(&dir.join(&s.detections), manifest.fps).map(|_| ()));
    }
    if dir.join(&s.audio).is_file() {
        check(&s.audio, load_audio(&dir.join(&s.audio)).map(|_| ()));
    }
    for (rel, source) in [(&s.annotations, AnnotationSource::Manual), (&s.model_actions, AnnotationSource::Model)] {
        if let Some(rel) = rel.as_ref().filter(|r| dir.join(r).is_file()) {
            check(rel, load_annotations(&manifest, dir, Some(rel), source).map(|_| ()));
        }
    }
    if let Some(rel) = s.screen_luma.as_ref().filter(|r| dir.join(r).is_file()) {
        check(rel, parse_luma_file(&dir.join(rel)).map(|_| ()));
    }
    report
}
