//! Parsers for every session input: the manifest, detector output, audio,
//! annotation files and the screen-luminance series.

mod annotations;
mod audio;
mod detections;
mod luma;
mod manifest;

pub use annotations::{format_annotations, parse_annotation_file, parse_annotations, AnnotationSource, RawAnnotation};
pub use audio::{load_audio, AudioClip, MAX_SAMPLE_RATE};
pub use detections::{parse_detection_stream, parse_detections, FrameDetections, PersonDetection};
pub use luma::{parse_luma_file, parse_luma_series, LumaSample};
pub use manifest::{load_manifest, read_manifest, SessionManifest, StreamPaths, StyleClass, Zone, MANIFEST_FILE};
