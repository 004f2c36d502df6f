//! Modeling daily song-stream counts from top-N charts as a Poisson process
//! with a baseline rate and exponentially decaying jumps.
//!
//! - [`ingest`]: chart CSV parsing, per-song series, first-life durations
//! - [`intensity`]: the jump-and-decay rate and its closed-form day integrals
//! - [`estimation`]: maximum likelihood and log-linear decay-rate fits
//! - [`simulation`]: synthetic daily counts and event times
//! - [`analytics`]: chart-wide descriptive statistics
//! - [`clustering`]: k-means over (decay rate, R²)

pub mod analytics;
pub mod cache;
pub mod clustering;
pub mod estimation;
pub mod ingest;
pub mod intensity;
pub mod simulation;
pub mod stats;

pub use estimation::{FitConfig, MleResult, RegressionResult, RegressionWindow};
pub use ingest::{ChartDataset, DailySeries, SongKey};
pub use intensity::{DayGrid, IntensityParams, JumpEvent};
