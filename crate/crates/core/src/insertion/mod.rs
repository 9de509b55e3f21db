//! Object resizing, overlap-controlled location tuning and compositing.

mod composite;
mod resize;
mod tuning;

pub use composite::{composite, render_plan, synthesized_id, BlendMode, SynthesizedImage};
pub use resize::{
    background_size_score, resize_object, resize_raster, sample_area, scaled_dims, AreaDraw, ResizeParams,
    ResizedObject, ScaleRange,
};
pub use tuning::{
    check_rules, compute_intervals, tune_locations, AchievedRatio, Placement, PlacementPlan, RuleCheck,
    TunedPlacement, TuningParams,
};
