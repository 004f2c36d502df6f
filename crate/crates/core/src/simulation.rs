//! Synthetic data from an [`IntensityParams`] model.
//!
//! All randomness comes from ChaCha8 (`rand_chacha` 0.9). Daily counts use one
//! generator stream per day, keyed by the day index, so each day's draw is
//! independent of iteration order. Continuous-time event streams use a
//! separate stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::intensity::{DayGrid, IntensityParams};

/// Name and version of the generator, recorded in run manifests.
pub const RNG_ID: &str = "chacha8/rand_chacha-0.9";

const EVENT_STREAM: u64 = u64::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum SimulationError {
    #[error("Poisson mean must be finite and non-negative, got {0}")]
    InvalidMean(f64),
    #[error("horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    #[default]
    DailyCounts,
    EventTimes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub grid: DayGrid,
    pub seed: u64,
    pub mode: SimMode,
}

/// Generator for day `day` (1-based) of a run seeded with `seed`.
pub fn day_rng(seed: u64, day: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(day as u64);
    rng
}

/// Threshold between sequential-search inversion and transformed rejection.
pub const INVERSION_LIMIT: f64 = 10.0;

/// Exact Poisson draw.
///
/// Means below [`INVERSION_LIMIT`] use inversion by sequential search; larger
/// means use Hörmann's transformed rejection with squeeze (PTRS).
pub fn poisson_sample<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64, SimulationError> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(SimulationError::InvalidMean(mean));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    if mean < INVERSION_LIMIT {
        Ok(inversion(mean, rng))
    } else {
        Ok(ptrs(mean, rng))
    }
}

fn inversion<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    // the tail beyond ~mean + 40 sd is below double precision
    while u > cdf && p > 0.0 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

fn ptrs<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mean + k * loglam - ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// Independent Poisson counts with means [`IntensityParams::expected_daily_counts`].
pub fn simulate_daily_counts(params: &IntensityParams, grid: DayGrid, seed: u64) -> Vec<u64> {
    params
        .expected_daily_counts(grid)
        .iter()
        .enumerate()
        .map(|(i, &mean)| {
            let mut rng = day_rng(seed, i + 1);
            poisson_sample(mean, &mut rng).expect("model means are finite and non-negative")
        })
        .collect()
}

/// Segment of the time axis on which the intensity is non-increasing, with
/// the dominating rate used for thinning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinningSegment {
    pub start: f64,
    pub end: f64,
    pub bound: f64,
}

/// Splits `[0, horizon)` at the event times; each segment's bound is the
/// intensity at its left end.
pub fn thinning_segments(params: &IntensityParams, horizon: f64) -> Vec<ThinningSegment> {
    let mut cuts = vec![0.0];
    cuts.extend(
        params
            .events()
            .iter()
            .map(|e| e.time)
            .filter(|&t| t > 0.0 && t < horizon),
    );
    cuts.push(horizon);
    cuts.windows(2)
        .map(|w| ThinningSegment {
            start: w[0],
            end: w[1],
            bound: params.intensity_at(w[0]),
        })
        .collect()
}

/// Arrival times on `[0, horizon)` by Lewis-Shedler thinning.
pub fn simulate_event_times(
    params: &IntensityParams,
    horizon: f64,
    seed: u64,
) -> Result<Vec<f64>, SimulationError> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(SimulationError::InvalidHorizon(horizon));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(EVENT_STREAM);
    let mut times = Vec::new();
    for seg in thinning_segments(params, horizon) {
        if seg.bound <= 0.0 {
            continue;
        }
        let mut t = seg.start;
        loop {
            let u: f64 = rng.random();
            // 1 - u lies in (0, 1]
            t += -(1.0 - u).ln() / seg.bound;
            if t >= seg.end {
                break;
            }
            let accept: f64 = rng.random();
            if accept * seg.bound <= params.intensity_at(t) {
                times.push(t);
            }
        }
    }
    Ok(times)
}

/// Counts event times into the days of `grid`; times past the grid are dropped.
pub fn bin_event_times(times: &[f64], grid: DayGrid) -> Vec<u64> {
    let mut bins = vec![0u64; grid.days];
    for &t in times {
        let idx = (t / grid.delta).floor();
        if idx >= 0.0 && (idx as usize) < grid.days {
            bins[idx as usize] += 1;
        }
    }
    bins
}

/// Result of [`simulate`]: whichever of counts or times the mode asks for.
#[derive(Debug, Clone, PartialEq)]
pub enum Simulated {
    DailyCounts(Vec<u64>),
    EventTimes(Vec<f64>),
}

pub fn simulate(params: &IntensityParams, config: &SimConfig) -> Simulated {
    match config.mode {
        SimMode::DailyCounts => {
            Simulated::DailyCounts(simulate_daily_counts(params, config.grid, config.seed))
        }
        SimMode::EventTimes => Simulated::EventTimes(
            simulate_event_times(params, config.grid.horizon(), config.seed)
                .expect("grid horizon is positive"),
        ),
    }
}
