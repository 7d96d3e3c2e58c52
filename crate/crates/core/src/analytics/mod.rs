//! Spatial and temporal session analytics and the summary document.

mod activity;
mod spatial;
mod summary;

pub use activity::{action_proportions, speak_pause_ratio, teaching_style_balance, ActionProportions, DonutParams, SpeakPause, TeachingStyle, OTHER_ZONE, UNTRACKED_ZONE};
pub use spatial::{compute_heatmap, point_in_polygon, trace_window, xy_series, zone_occupancy, HeatmapGrid, XyPoint, ZoneOccupancy};
pub use summary::*;
