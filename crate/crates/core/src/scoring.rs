//! Multi-criteria speaking scores on a 0..100 scale and style verdicts
//! against published norms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::speech::{SpeechParams, WindowFeatures};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Direction {
    HigherBetter,
    TargetCentered { target: f64, tolerance: f64 },
}

/// Maps a raw value onto `[0, 100]`.
pub fn normalize_feature(value: f64, range: (f64, f64), direction: Direction) -> f64 {
    let (lo, hi) = range;
    match direction {
        Direction::HigherBetter => 100.0 * ((value - lo) / (hi - lo)).clamp(0.0, 1.0),
        Direction::TargetCentered { target, tolerance } => 100.0 * (1.0 - (value - target).abs() / tolerance).max(0.0),
    }
}

/// Arithmetic mean of normalized scores.
pub fn score_equal_weights(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Scoring("no features to score".into()));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Weighted mean with weights proportional to `1 / std`. Zero deviations are
/// replaced by the smallest positive one. Returns the score and the weights.
pub fn score_reciprocal_std_weights(scores: &[f64], stds: &[f64]) -> Result<(f64, Vec<f64>)> {
    if scores.is_empty() {
        return Err(Error::Scoring("no features to score".into()));
    }
    if scores.len() != stds.len() {
        return Err(Error::Scoring(format!("{} scores but {} deviations", scores.len(), stds.len())));
    }
    if stds.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::Scoring("deviations must be finite and non-negative".into()));
    }
    let min_positive = stds
        .iter()
        .copied()
        .filter(|s| *s > 0.0)
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::Scoring("every feature has zero deviation".into()))?;
    let inv: Vec<f64> = stds.iter().map(|s| 1.0 / if *s > 0.0 { *s } else { min_positive }).collect();
    let total: f64 = inv.iter().sum();
    let weights: Vec<f64> = inv.iter().map(|v| v / total).collect();
    let score = weights.iter().zip(scores).map(|(w, s)| w * s).sum::<f64>();
    // Keep round-off from escaping the convex hull of the inputs.
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((score.clamp(lo, hi), weights))
}

/// Features that can enter the speaking score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreFeature {
    LoudnessStability,
    Intonation,
    Clarity,
    SpeakingRate,
    SpeechFraction,
}

impl ScoreFeature {
    pub const ALL: [ScoreFeature; 5] = [
        ScoreFeature::LoudnessStability,
        ScoreFeature::Intonation,
        ScoreFeature::Clarity,
        ScoreFeature::SpeakingRate,
        ScoreFeature::SpeechFraction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScoreFeature::LoudnessStability => "loudness_stability",
            ScoreFeature::Intonation => "intonation",
            ScoreFeature::Clarity => "clarity",
            ScoreFeature::SpeakingRate => "speaking_rate",
            ScoreFeature::SpeechFraction => "speech_fraction",
        }
    }

    /// Raw-value range and scoring direction.
    pub fn scale(self, norms: &StyleNorms) -> ((f64, f64), Direction) {
        match self {
            ScoreFeature::LoudnessStability => ((0.0, 40.0), Direction::TargetCentered { target: 0.0, tolerance: 12.0 }),
            ScoreFeature::Intonation => ((0.0, 4.0), Direction::TargetCentered { target: norms.monotony_average, tolerance: 1.0 }),
            ScoreFeature::Clarity => ((0.0, 1.0), Direction::HigherBetter),
            ScoreFeature::SpeakingRate => (
                (0.0, 300.0),
                Direction::TargetCentered {
                    target: norms.speaking_rate_target,
                    tolerance: norms.speaking_rate_tolerance,
                },
            ),
            ScoreFeature::SpeechFraction => ((0.0, 1.0), Direction::HigherBetter),
        }
    }

    /// Raw value of this feature in one window.
    pub fn from_window(self, w: &WindowFeatures, params: &SpeechParams) -> Option<f64> {
        match self {
            ScoreFeature::LoudnessStability => w.statistical.loudness_std_db,
            ScoreFeature::Intonation => w.linguistic.intonation_score,
            ScoreFeature::Clarity => w.linguistic.cpp_db.map(|c| params.clarity_from_cpp(c)),
            ScoreFeature::SpeakingRate => Some(w.contextual.speaking_rate_wpm),
            ScoreFeature::SpeechFraction => Some(w.contextual.speech_fraction),
        }
    }
}

impl fmt::Display for ScoreFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreFeature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scoring feature '{s}'")))
    }
}

/// One named raw value with its normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub value: f64,
    pub range: (f64, f64),
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    features: Vec<Feature>,
}

impl FeatureVector {
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        for f in &features {
            if !(f.range.0 < f.range.1) {
                return Err(Error::Scoring(format!("feature '{}' has an empty range", f.name)));
            }
            if !f.value.is_finite() {
                return Err(Error::Scoring(format!("feature '{}' is not finite", f.name)));
            }
            if let Direction::TargetCentered { tolerance, .. } = f.direction {
                if !(tolerance > 0.0) {
                    return Err(Error::Scoring(format!("feature '{}' needs a positive tolerance", f.name)));
                }
            }
        }
        Ok(Self { features })
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn normalized(&self) -> Vec<f64> {
        self.features.iter().map(|f| normalize_feature(f.value, f.range, f.direction)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub name: String,
    pub raw: f64,
    pub score: f64,
    /// Deviation of the normalized score across fine windows.
    pub std: Option<f64>,
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakingScore {
    pub features: Vec<FeatureScore>,
    pub ew_score: f64,
    /// `None` when every feature is constant across windows.
    pub rw_score: Option<f64>,
    /// Requested features with no value in this session.
    pub unavailable: Vec<String>,
}

/// Scores session-level raw values, weighting by variability of each
/// feature's normalized score across `fine_windows`.
pub fn score_session(
    session: &[(ScoreFeature, Option<f64>)],
    fine_windows: &[WindowFeatures],
    norms: &StyleNorms,
    params: &SpeechParams,
) -> Result<SpeakingScore> {
    let mut features = Vec::new();
    let mut unavailable = Vec::new();
    for &(feature, raw) in session {
        let Some(raw) = raw.filter(|v| v.is_finite()) else {
            unavailable.push(feature.name().to_string());
            continue;
        };
        let (range, direction) = feature.scale(norms);
        let history: Vec<f64> = fine_windows
            .iter()
            .filter_map(|w| feature.from_window(w, params))
            .map(|v| normalize_feature(v, range, direction))
            .collect();
        features.push(FeatureScore {
            name: feature.name().to_string(),
            raw,
            score: normalize_feature(raw, range, direction),
            std: crate::speech::population_std(&history),
            weight: None,
        });
    }
    let scores: Vec<f64> = features.iter().map(|f| f.score).collect();
    let ew_score = score_equal_weights(&scores)?;
    let stds: Option<Vec<f64>> = features.iter().map(|f| f.std).collect();
    let rw = stds.and_then(|s| score_reciprocal_std_weights(&scores, &s).ok());
    let rw_score = rw.as_ref().map(|(score, weights)| {
        for (f, w) in features.iter_mut().zip(weights) {
            f.weight = Some(*w);
        }
        *score
    });
    Ok(SpeakingScore { features, ew_score, rw_score, unavailable })
}

/// Literature norms for speaking style.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StyleNorms {
    pub speaking_rate_target: f64,
    pub speaking_rate_band: [f64; 2],
    /// Tolerance of the speaking-rate score around the target.
    pub speaking_rate_tolerance: f64,
    pub clarity_acceptable: f64,
    pub clarity_optimal: f64,
    pub monotony_low: f64,
    pub monotony_average: f64,
    pub monotony_high: f64,
}

impl Default for StyleNorms {
    fn default() -> Self {
        Self {
            speaking_rate_target: 140.0,
            speaking_rate_band: [125.0, 160.0],
            speaking_rate_tolerance: 40.0,
            clarity_acceptable: 0.5,
            clarity_optimal: 0.75,
            monotony_low: 0.4,
            monotony_average: 1.0,
            monotony_high: 1.6,
        }
    }
}

impl StyleNorms {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.speaking_rate_band;
        let ordered = lo < hi
            && self.clarity_acceptable < self.clarity_optimal
            && self.monotony_low < self.monotony_average
            && self.monotony_average < self.monotony_high
            && self.speaking_rate_tolerance > 0.0;
        if ordered {
            Ok(())
        } else {
            Err(Error::Config("style norm band edges must be increasing".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateBand {
    Below,
    Within,
    Above,
    InsufficientData,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClarityBand {
    Suboptimal,
    Acceptable,
    Optimal,
    InsufficientData,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotonyBand {
    Monotonous,
    Average,
    Lively,
    InsufficientData,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StyleMetrics {
    pub speaking_rate_wpm: Option<f64>,
    /// CPP-derived clarity in `[0, 1]`.
    pub clarity: Option<f64>,
    /// Intonation score (semitone spread over the reference spread).
    pub monotony: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StyleVerdicts {
    pub speaking_rate: RateBand,
    /// Absolute distance to the target rate, wpm.
    pub speaking_rate_distance: Option<f64>,
    pub clarity: ClarityBand,
    pub monotony: MonotonyBand,
}

/// Band membership with half-open bands `[lo, hi)`.
pub fn classify_style(metrics: &StyleMetrics, norms: &StyleNorms) -> StyleVerdicts {
    let rate = metrics.speaking_rate_wpm.filter(|v| v.is_finite());
    let speaking_rate = match rate {
        None => RateBand::InsufficientData,
        Some(v) if v < norms.speaking_rate_band[0] => RateBand::Below,
        Some(v) if v < norms.speaking_rate_band[1] => RateBand::Within,
        Some(_) => RateBand::Above,
    };
    let clarity = match metrics.clarity.filter(|v| v.is_finite()) {
        None => ClarityBand::InsufficientData,
        Some(v) if v < norms.clarity_acceptable => ClarityBand::Suboptimal,
        Some(v) if v < norms.clarity_optimal => ClarityBand::Acceptable,
        Some(_) => ClarityBand::Optimal,
    };
    let monotony = match metrics.monotony.filter(|v| v.is_finite()) {
        None => MonotonyBand::InsufficientData,
        Some(v) if v < norms.monotony_low => MonotonyBand::Monotonous,
        Some(v) if v < norms.monotony_high => MonotonyBand::Average,
        Some(_) => MonotonyBand::Lively,
    };
    StyleVerdicts {
        speaking_rate,
        speaking_rate_distance: rate.map(|v| (v - norms.speaking_rate_target).abs()),
        clarity,
        monotony,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    const TARGET_RATE: Direction = Direction::TargetCentered { target: 140.0, tolerance: 40.0 };

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_feature(1.0, (0.0, 1.0), Direction::HigherBetter), 100.0);
        assert_eq!(normalize_feature(140.0, (0.0, 300.0), TARGET_RATE), 100.0);
        assert!((normalize_feature(150.0, (0.0, 300.0), TARGET_RATE) - 75.0).abs() < 1e-12);
        assert_eq!(normalize_feature(-3.0, (0.0, 1.0), Direction::HigherBetter), 0.0);
        assert_eq!(normalize_feature(260.0, (0.0, 300.0), TARGET_RATE), 0.0);
    }

    #[test]
    fn equal_weights() {
        assert_eq!(score_equal_weights(&[80.0, 60.0, 100.0]).unwrap(), 80.0);
        assert_eq!(score_equal_weights(&[42.5]).unwrap(), 42.5);
        assert_eq!(score_equal_weights(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(score_equal_weights(&[]).is_err());
    }

    #[test]
    fn reciprocal_weights_match_rational_oracle() {
        let (rw, w) = score_reciprocal_std_weights(&[70.0, 84.0, 98.0], &[1.0, 2.0, 4.0]).unwrap();
        let inv = [Ratio::new(1i64, 1), Ratio::new(1, 2), Ratio::new(1, 4)];
        let total: Ratio<i64> = inv.iter().sum();
        let exact: Vec<Ratio<i64>> = inv.iter().map(|v| v / total).collect();
        assert_eq!(exact, vec![Ratio::new(4, 7), Ratio::new(2, 7), Ratio::new(1, 7)]);
        for (a, b) in w.iter().zip(&exact) {
            assert!((a - *b.numer() as f64 / *b.denom() as f64).abs() < 1e-12);
        }
        let exact_rw: Ratio<i64> = exact.iter().zip([70, 84, 98]).map(|(w, s)| w * Ratio::from_integer(s)).sum();
        assert_eq!(exact_rw, Ratio::from_integer(78));
        assert!((rw - 78.0).abs() < 1e-9);
    }

    #[test]
    fn equal_stds_reduce_to_equal_weights() {
        let scores = [12.0, 55.0, 91.0, 30.0];
        let (rw, _) = score_reciprocal_std_weights(&scores, &[3.0; 4]).unwrap();
        assert!((rw - score_equal_weights(&scores).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn zero_std_uses_smallest_positive() {
        let (_, w) = score_reciprocal_std_weights(&[10.0, 20.0, 30.0], &[0.0, 2.0, 4.0]).unwrap();
        let (_, expected) = score_reciprocal_std_weights(&[10.0, 20.0, 30.0], &[2.0, 2.0, 4.0]).unwrap();
        assert_eq!(w, expected);
        assert!(score_reciprocal_std_weights(&[10.0, 20.0], &[0.0, 0.0]).is_err());
        assert!(score_reciprocal_std_weights(&[10.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn verdict_examples() {
        let n = StyleNorms::default();
        let v = classify_style(&StyleMetrics { speaking_rate_wpm: Some(140.0), clarity: Some(0.8), monotony: Some(0.3) }, &n);
        assert_eq!(v.speaking_rate, RateBand::Within);
        assert_eq!(v.speaking_rate_distance, Some(0.0));
        assert_eq!(v.clarity, ClarityBand::Optimal);
        assert_eq!(v.monotony, MonotonyBand::Monotonous);

        let edges = classify_style(&StyleMetrics { speaking_rate_wpm: Some(160.0), clarity: Some(0.75), monotony: Some(1.6) }, &n);
        assert_eq!((edges.speaking_rate, edges.clarity, edges.monotony), (RateBand::Above, ClarityBand::Optimal, MonotonyBand::Lively));
        let low = classify_style(&StyleMetrics { speaking_rate_wpm: Some(124.9), clarity: Some(0.5), monotony: Some(0.4) }, &n);
        assert_eq!((low.speaking_rate, low.clarity, low.monotony), (RateBand::Below, ClarityBand::Acceptable, MonotonyBand::Average));

        let none = classify_style(&StyleMetrics::default(), &n);
        assert_eq!(none.speaking_rate, RateBand::InsufficientData);
        assert_eq!(none.clarity, ClarityBand::InsufficientData);
        assert_eq!(none.monotony, MonotonyBand::InsufficientData);
        assert_eq!(serde_json::to_string(&none.clarity).unwrap(), "\"insufficient_data\"");
    }

    #[test]
    fn feature_names_round_trip() {
        for f in ScoreFeature::ALL {
            assert_eq!(f.name().parse::<ScoreFeature>().unwrap(), f);
        }
        assert!("pitch".parse::<ScoreFeature>().is_err());
        assert!(StyleNorms::default().validate().is_ok());
    }

    #[test]
    fn feature_vector_validation() {
        let ok = Feature { name: "a".into(), value: 0.5, range: (0.0, 1.0), direction: Direction::HigherBetter };
        assert_eq!(FeatureVector::new(vec![ok.clone()]).unwrap().normalized(), vec![50.0]);
        let bad = Feature { range: (1.0, 1.0), ..ok.clone() };
        assert!(FeatureVector::new(vec![bad]).is_err());
        let nan = Feature { value: f64::NAN, ..ok };
        assert!(FeatureVector::new(vec![nan]).is_err());
    }

    fn scored() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((0.0..=100.0f64, 0.01..50.0f64), 1..8)
    }

    proptest! {
        #[test]
        fn weights_sum_to_one_and_rw_bounded(items in scored()) {
            let (s, d): (Vec<f64>, Vec<f64>) = items.into_iter().unzip();
            let (rw, w) = score_reciprocal_std_weights(&s, &d).unwrap();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(rw >= lo && rw <= hi);
        }

        #[test]
        fn rw_permutation_equivariant(items in scored(), seed in any::<u64>()) {
            let (s, d): (Vec<f64>, Vec<f64>) = items.iter().copied().unzip();
            let mut perm = items.clone();
            let n = perm.len();
            for i in (1..n).rev() {
                perm.swap(i, (seed as usize).wrapping_mul(i + 7) % (i + 1));
            }
            let (ps, pd): (Vec<f64>, Vec<f64>) = perm.into_iter().unzip();
            let a = score_reciprocal_std_weights(&s, &d).unwrap().0;
            let b = score_reciprocal_std_weights(&ps, &pd).unwrap().0;
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn raising_a_score_never_lowers_totals(items in scored(), idx in 0usize..8, bump in 0.0..50.0f64) {
            let (s, d): (Vec<f64>, Vec<f64>) = items.into_iter().unzip();
            let i = idx % s.len();
            let mut up = s.clone();
            up[i] = (up[i] + bump).min(100.0);
            prop_assert!(score_equal_weights(&up).unwrap() >= score_equal_weights(&s).unwrap() - 1e-9);
            let a = score_reciprocal_std_weights(&s, &d).unwrap().0;
            let b = score_reciprocal_std_weights(&up, &d).unwrap().0;
            prop_assert!(b >= a - 1e-9);
        }

        #[test]
        fn verdict_depends_only_on_band(a in 0.0..400.0f64, b in 0.0..400.0f64) {
            let n = StyleNorms::default();
            let band = |v: f64| if v < 125.0 { 0 } else if v < 160.0 { 1 } else { 2 };
            let va = classify_style(&StyleMetrics { speaking_rate_wpm: Some(a), ..Default::default() }, &n);
            let vb = classify_style(&StyleMetrics { speaking_rate_wpm: Some(b), ..Default::default() }, &n);
            if band(a) == band(b) {
                prop_assert_eq!(va.speaking_rate, vb.speaking_rate);
            } else {
                prop_assert_ne!(va.speaking_rate, vb.speaking_rate);
            }
            let ma = classify_style(&StyleMetrics { monotony: Some(a / 100.0), clarity: Some(a / 400.0), ..Default::default() }, &n);
            let mb = classify_style(&StyleMetrics { monotony: Some(b / 100.0), clarity: Some(b / 400.0), ..Default::default() }, &n);
            let mband = |v: f64| if v < 0.4 { 0 } else if v < 1.6 { 1 } else { 2 };
            if mband(a / 100.0) == mband(b / 100.0) {
                prop_assert_eq!(ma.monotony, mb.monotony);
            }
            let cband = |v: f64| if v < 0.5 { 0 } else if v < 0.75 { 1 } else { 2 };
            if cband(a / 400.0) == cband(b / 400.0) {
                prop_assert_eq!(ma.clarity, mb.clarity);
            }
        }
    }
}
