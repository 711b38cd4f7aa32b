//! Experiments, statistics, CSV reports and SVG rendering.

pub mod csv;
pub mod experiment;
pub mod stats;
pub mod svg;

pub use experiment::{
    observables_experiment, scaling_experiment, ExperimentConfig, ExperimentError,
    ObservableRecord, ScaleMode, ScalingPoint, ScalingResult, TrialRecord,
};
pub use stats::{fit_power_law, linear_fit, mean_stderr, LinearFit, PowerLawFit, StatsError};
pub use svg::{render_strip, render_svg, RenderMode, RenderOptions};
