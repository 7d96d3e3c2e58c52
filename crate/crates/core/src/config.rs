//! Every tunable parameter of the analysis, loadable from TOML or JSON and
//! overridable per key.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::actions::{HandWaveParams, SlideChangeParams};
use crate::analytics::DonutParams;
use crate::scoring::{ScoreFeature, StyleNorms};
use crate::speech::SpeechParams;
use crate::tracking::TrackingParams;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActionParams {
    pub hand_wave: HandWaveParams,
    pub slide_change: SlideChangeParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowParams {
    pub coarse_seconds: f64,
    pub fine_seconds: f64,
}

impl Default for WindowParams {
    fn default() -> Self {
        Self { coarse_seconds: 60.0, fine_seconds: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringParams {
    pub features: Vec<ScoreFeature>,
    pub norms: StyleNorms,
}

impl Default for ScoringParams {
    fn default() -> Self {
        Self { features: ScoreFeature::ALL.to_vec(), norms: StyleNorms::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsParams {
    pub heatmap_rows: usize,
    pub heatmap_cols: usize,
    /// Tick spacing of the downsampled X-Y series, seconds.
    pub xy_step: f64,
    /// Length of the position trace on the review screen, seconds.
    pub trace_span: f64,
    pub donut: DonutParams,
}

impl Default for AnalyticsParams {
    fn default() -> Self {
        Self {
            heatmap_rows: 12,
            heatmap_cols: 20,
            xy_step: 0.5,
            trace_span: 60.0,
            donut: DonutParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub tracking: TrackingParams,
    pub actions: ActionParams,
    pub speech: SpeechParams,
    pub windows: WindowParams,
    pub scoring: ScoringParams,
    pub analytics: AnalyticsParams,
}

impl AnalysisConfig {
    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `section.key=value`. The value is read as JSON when it parses
    /// (numbers, booleans, arrays) and as a bare string otherwise.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
        let path = path.trim();
        let raw = raw.trim();
        let mut doc = serde_json::to_value(&*self)?;
        let mut slot = &mut doc;
        for key in path.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|m| m.get_mut(key))
                .ok_or_else(|| Error::Config(format!("unknown config key '{path}'")))?;
        }
        *slot = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let updated: Self = serde_json::from_value(doc).map_err(|e| Error::Config(format!("{path}: {e}")))?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.speech.validate()?;
        self.scoring.norms.validate()?;
        let t = &self.tracking;
        if !(t.match_radius > 0.0 && t.max_cost > 0.0 && t.exit_after >= 0.0 && t.history_len >= 2) {
            return Err(Error::Config("tracking parameters out of range".into()));
        }
        if !(self.windows.coarse_seconds > 0.0 && self.windows.fine_seconds > 0.0) {
            return Err(Error::Config("window lengths must be > 0".into()));
        }
        let a = &self.analytics;
        if a.heatmap_rows == 0 || a.heatmap_cols == 0 || !(a.xy_step > 0.0) || !(a.trace_span > 0.0) {
            return Err(Error::Config("analytics parameters out of range".into()));
        }
        if self.actions.slide_change.debounce < 0.0 || self.actions.hand_wave.window <= 0.0 {
            return Err(Error::Config("action parameters out of range".into()));
        }
        Ok(())
    }
}
