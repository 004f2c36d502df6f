//! Jump-and-decay intensity for a song's stream arrivals.
//!
//! The arrival rate is a baseline plus one exponentially decaying term per
//! jump event:
//!
//! ```text
//! rate(t) = lambda + sum_j beta_j * theta_j * exp(-beta_j * (t - a_j)) * 1{t >= a_j}
//! ```
//!
//! `theta_j` is the total number of extra streams the jump contributes over an
//! infinite horizon and `beta_j * theta_j` is the instantaneous rate jump at
//! `a_j`. The expected count on day `i` (the interval `[delta*(i-1), delta*i]`)
//! has the closed form
//!
//! ```text
//! lambda*delta + sum_j theta_j * (exp(-beta_j*(delta*(i-1) - a_j)+) - exp(-beta_j*(delta*i - a_j)+))
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("baseline rate must be finite and non-negative, got {0}")]
    InvalidBaseline(f64),
    #[error(
        "event at a={time}: theta must be > 0, beta > 0 and a >= 0 (theta={theta}, beta={beta})"
    )]
    InvalidEvent { time: f64, theta: f64, beta: f64 },
    #[error("event times must be strictly increasing ({0} follows {1})")]
    UnorderedEvents(f64, f64),
    #[error("day length must be positive and finite, got {0}")]
    InvalidDelta(f64),
    #[error("a day grid needs at least one day")]
    EmptyGrid,
}

/// One exogenous jump: extra rate `beta * theta` at `time`, decaying at `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    #[serde(rename = "a")]
    pub time: f64,
    pub theta: f64,
    pub beta: f64,
}

impl JumpEvent {
    pub fn new(time: f64, theta: f64, beta: f64) -> Result<Self, ModelError> {
        let ok = time.is_finite()
            && time >= 0.0
            && theta.is_finite()
            && theta > 0.0
            && beta.is_finite()
            && beta > 0.0;
        if !ok {
            return Err(ModelError::InvalidEvent { time, theta, beta });
        }
        Ok(Self { time, theta, beta })
    }

    /// Rate contributed at `t`.
    pub fn rate_at(&self, t: f64) -> f64 {
        if t < self.time {
            0.0
        } else {
            self.beta * self.theta * (-self.beta * (t - self.time)).exp()
        }
    }

    /// Fraction of `theta` delivered over `[start, end]`, i.e.
    /// `exp(-beta (start-a)+) - exp(-beta (end-a)+)`.
    pub fn mass_fraction(&self, start: f64, end: f64) -> f64 {
        let lo = start - self.time;
        let hi = end - self.time;
        if hi <= 0.0 {
            0.0
        } else if lo >= 0.0 {
            // factored to avoid cancellation far from the jump
            (-self.beta * lo).exp() * -(-self.beta * (hi - lo)).exp_m1()
        } else {
            -(-self.beta * hi).exp_m1()
        }
    }

    /// Expected extra streams over `[start, end]`.
    pub fn mass(&self, start: f64, end: f64) -> f64 {
        self.theta * self.mass_fraction(start, end)
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawParams {
    lambda: f64,
    #[serde(default)]
    events: Vec<JumpEvent>,
}

/// Baseline rate plus time-ordered jump events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct IntensityParams {
    lambda: f64,
    events: Vec<JumpEvent>,
}

impl TryFrom<RawParams> for IntensityParams {
    type Error = ModelError;

    fn try_from(raw: RawParams) -> Result<Self, Self::Error> {
        Self::new(raw.lambda, raw.events)
    }
}

impl IntensityParams {
    pub fn new(lambda: f64, events: Vec<JumpEvent>) -> Result<Self, ModelError> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(ModelError::InvalidBaseline(lambda));
        }
        for e in &events {
            JumpEvent::new(e.time, e.theta, e.beta)?;
        }
        for pair in events.windows(2) {
            if pair[1].time <= pair[0].time {
                return Err(ModelError::UnorderedEvents(pair[1].time, pair[0].time));
            }
        }
        Ok(Self { lambda, events })
    }

    pub fn homogeneous(lambda: f64) -> Result<Self, ModelError> {
        Self::new(lambda, Vec::new())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn events(&self) -> &[JumpEvent] {
        &self.events
    }

    pub fn event_times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.time).collect()
    }

    /// Instantaneous rate at `t >= 0`.
    pub fn intensity_at(&self, t: f64) -> f64 {
        self.lambda + self.events.iter().map(|e| e.rate_at(t)).sum::<f64>()
    }

    /// Expected count on `[start, end]`.
    pub fn integrate(&self, start: f64, end: f64) -> f64 {
        self.lambda * (end - start) + self.events.iter().map(|e| e.mass(start, end)).sum::<f64>()
    }

    /// Expected count on day `day` (1-based), the interval `[delta*(day-1), delta*day]`.
    pub fn integrated_intensity(&self, day: usize, delta: f64) -> f64 {
        assert!(day >= 1, "days are numbered from 1");
        let (start, end) = day_bounds(day, delta);
        self.lambda * delta + self.events.iter().map(|e| e.mass(start, end)).sum::<f64>()
    }

    pub fn expected_daily_counts(&self, grid: DayGrid) -> Vec<f64> {
        (1..=grid.days)
            .map(|i| self.integrated_intensity(i, grid.delta))
            .collect()
    }

    /// Expected total over the first `days` days, in telescoped form.
    pub fn expected_total(&self, grid: DayGrid) -> f64 {
        let horizon = grid.delta * grid.days as f64;
        self.lambda * horizon
            + self
                .events
                .iter()
                .map(|e| e.mass(0.0, horizon))
                .sum::<f64>()
    }
}

pub(crate) fn day_bounds(day: usize, delta: f64) -> (f64, f64) {
    (delta * (day - 1) as f64, delta * day as f64)
}

/// `days` days of length `delta` starting at time 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayGrid {
    pub delta: f64,
    pub days: usize,
}

impl DayGrid {
    pub fn new(delta: f64, days: usize) -> Result<Self, ModelError> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(ModelError::InvalidDelta(delta));
        }
        if days == 0 {
            return Err(ModelError::EmptyGrid);
        }
        Ok(Self { delta, days })
    }

    pub fn horizon(&self) -> f64 {
        self.delta * self.days as f64
    }
}
