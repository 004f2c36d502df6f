//! Maximum-likelihood and log-linear estimation of jump-and-decay intensities
//! from daily counts.
//!
//! Day `i` (1-based) observes `n_i ~ Poisson(D_i)` where `D_i` is
//! [`IntensityParams::integrated_intensity`]. Days may be unobserved (`None`),
//! in which case they are left out of every sum.
//!
//! Parameters are flattened as `[lambda, theta_0, beta_0, theta_1, beta_1, ...]`
//! whenever a plain vector is needed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::intensity::{day_bounds, IntensityParams, JumpEvent, ModelError};
use crate::stats::linear_fit;

#[derive(Debug, Error, PartialEq)]
pub enum EstimationError {
    #[error("day {day}: observed {count} streams where the model expects none")]
    ImpossibleObservation { day: usize, count: u64 },
    #[error("need at least {needed} usable days, have {available}")]
    InsufficientData { needed: usize, available: usize },
    #[error("jump time {time} is not a multiple of the day length inside [0, {horizon})")]
    InvalidJumpTime { time: f64, horizon: f64 },
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),
    #[error("regression window {first}..={last} is outside the series (1..={len})")]
    InvalidWindow {
        first: usize,
        last: usize,
        len: usize,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A single day's observation: a count, or `None` if the day was not observed.
pub trait Observation: Copy {
    fn observed(self) -> Option<u64>;
}

impl Observation for u64 {
    fn observed(self) -> Option<u64> {
        Some(self)
    }
}

impl Observation for Option<u64> {
    fn observed(self) -> Option<u64> {
        self
    }
}

impl<T: Observation> Observation for &T {
    fn observed(self) -> Option<u64> {
        (*self).observed()
    }
}

/// Per-parameter quantities in the same shape as [`IntensityParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub lambda: f64,
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
}

impl ParamVector {
    fn zeros(events: usize) -> Self {
        Self {
            lambda: 0.0,
            theta: vec![0.0; events],
            beta: vec![0.0; events],
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(1 + 2 * self.theta.len());
        v.push(self.lambda);
        for (t, b) in self.theta.iter().zip(&self.beta) {
            v.push(*t);
            v.push(*b);
        }
        v
    }

    pub fn norm(&self) -> f64 {
        self.to_vec().iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Flattens parameters into `[lambda, theta_0, beta_0, ...]`.
pub fn params_to_vec(params: &IntensityParams) -> Vec<f64> {
    let mut v = Vec::with_capacity(1 + 2 * params.events().len());
    v.push(params.lambda());
    for e in params.events() {
        v.push(e.theta);
        v.push(e.beta);
    }
    v
}

/// Inverse of [`params_to_vec`] for fixed event times.
pub fn params_from_vec(values: &[f64], times: &[f64]) -> Result<IntensityParams, ModelError> {
    assert_eq!(values.len(), 1 + 2 * times.len());
    let events = times
        .iter()
        .enumerate()
        .map(|(j, &a)| JumpEvent::new(a, values[1 + 2 * j], values[2 + 2 * j]))
        .collect::<Result<Vec<_>, _>>()?;
    IntensityParams::new(values[0], events)
}

/// Derivatives of one day's expected count `D_i`.
struct DayTerms {
    mean: f64,
    /// dD/dtheta_j
    d_theta: Vec<f64>,
    /// dD/dbeta_j
    d_beta: Vec<f64>,
    /// d2D/dbeta_j^2
    dd_beta: Vec<f64>,
    /// d2D/(dtheta_j dbeta_j)
    dd_theta_beta: Vec<f64>,
}

impl DayTerms {
    fn new(events: usize) -> Self {
        Self {
            mean: 0.0,
            d_theta: vec![0.0; events],
            d_beta: vec![0.0; events],
            dd_beta: vec![0.0; events],
            dd_theta_beta: vec![0.0; events],
        }
    }

    fn fill(&mut self, params: &IntensityParams, day: usize, delta: f64) {
        let (start, end) = day_bounds(day, delta);
        self.mean = params.lambda() * delta;
        for (j, e) in params.events().iter().enumerate() {
            let frac = e.mass_fraction(start, end);
            let lo = (start - e.time).max(0.0);
            let hi = (end - e.time).max(0.0);
            let e_lo = (-e.beta * lo).exp();
            let e_hi = (-e.beta * hi).exp();
            let slope = hi * e_hi - lo * e_lo;
            self.mean += e.theta * frac;
            self.d_theta[j] = frac;
            self.d_beta[j] = e.theta * slope;
            self.dd_beta[j] = e.theta * (lo * lo * e_lo - hi * hi * e_hi);
            self.dd_theta_beta[j] = slope;
        }
    }
}

fn check_day(day: usize, count: u64, mean: f64) -> Result<(), EstimationError> {
    if count > 0 && !(mean > 0.0) {
        return Err(EstimationError::ImpossibleObservation { day, count });
    }
    Ok(())
}

/// `sum_i [n_i log D_i - log(n_i!) - D_i]` over observed days.
pub fn log_likelihood<C: Observation>(
    params: &IntensityParams,
    counts: &[C],
    delta: f64,
) -> Result<f64, EstimationError> {
    let mut total = 0.0;
    for (idx, c) in counts.iter().enumerate() {
        let Some(n) = c.observed() else { continue };
        let day = idx + 1;
        let mean = params.integrated_intensity(day, delta);
        check_day(day, n, mean)?;
        let nf = n as f64;
        if n > 0 {
            total += nf * mean.ln() - ln_gamma(nf + 1.0);
        }
        total -= mean;
    }
    Ok(total)
}

/// Value and derivatives of the log-likelihood from one pass over the days.
#[derive(Debug, Clone)]
struct Evaluation {
    value: f64,
    gradient: ParamVector,
    curvature: ParamVector,
    /// Diagonal of the expected information; never negative.
    fisher: ParamVector,
    /// Dense row-major Hessian in flattened order, when requested.
    hessian: Option<Vec<f64>>,
}

fn evaluate<C: Observation>(
    params: &IntensityParams,
    counts: &[C],
    delta: f64,
    with_hessian: bool,
) -> Result<Evaluation, EstimationError> {
    let m = params.events().len();
    let dim = 1 + 2 * m;
    let mut terms = DayTerms::new(m);
    let mut value = 0.0;
    let mut gradient = ParamVector::zeros(m);
    let mut curvature = ParamVector::zeros(m);
    let mut fisher = ParamVector::zeros(m);
    let mut hessian = with_hessian.then(|| vec![0.0; dim * dim]);
    let mut first = vec![0.0; dim];
    for (idx, c) in counts.iter().enumerate() {
        let Some(n) = c.observed() else { continue };
        let day = idx + 1;
        terms.fill(params, day, delta);
        let mean = terms.mean;
        check_day(day, n, mean)?;
        let nf = n as f64;
        // n/D and n/D^2 with 0/0 read as 0
        let (w1, w2) = if n > 0 {
            (nf / mean, nf / (mean * mean))
        } else {
            (0.0, 0.0)
        };
        let inv_mean = if mean > 0.0 { 1.0 / mean } else { 0.0 };
        if n > 0 {
            value += nf * mean.ln() - ln_gamma(nf + 1.0);
        }
        value -= mean;

        gradient.lambda += (w1 - 1.0) * delta;
        curvature.lambda -= w2 * delta * delta;
        fisher.lambda += delta * delta * inv_mean;
        for j in 0..m {
            let dt = terms.d_theta[j];
            let db = terms.d_beta[j];
            gradient.theta[j] += (w1 - 1.0) * dt;
            gradient.beta[j] += (w1 - 1.0) * db;
            curvature.theta[j] -= w2 * dt * dt;
            curvature.beta[j] += (w1 - 1.0) * terms.dd_beta[j] - w2 * db * db;
            fisher.theta[j] += dt * dt * inv_mean;
            fisher.beta[j] += db * db * inv_mean;
        }

        if let Some(h) = hessian.as_mut() {
            first[0] = delta;
            for j in 0..m {
                first[1 + 2 * j] = terms.d_theta[j];
                first[2 + 2 * j] = terms.d_beta[j];
            }
            for r in 0..dim {
                for c in r..dim {
                    let v = w2 * first[r] * first[c];
                    h[r * dim + c] -= v;
                    if c != r {
                        h[c * dim + r] -= v;
                    }
                }
            }
            for j in 0..m {
                let (t, b) = (1 + 2 * j, 2 + 2 * j);
                h[b * dim + b] += (w1 - 1.0) * terms.dd_beta[j];
                h[t * dim + b] += (w1 - 1.0) * terms.dd_theta_beta[j];
                h[b * dim + t] += (w1 - 1.0) * terms.dd_theta_beta[j];
            }
        }
    }
    Ok(Evaluation {
        value,
        gradient,
        curvature,
        fisher,
        hessian,
    })
}

/// Partial derivatives of [`log_likelihood`] with respect to the baseline and
/// each event's magnitude and decay rate (event times held fixed).
pub fn log_likelihood_gradient<C: Observation>(
    params: &IntensityParams,
    counts: &[C],
    delta: f64,
) -> Result<ParamVector, EstimationError> {
    Ok(evaluate(params, counts, delta, false)?.gradient)
}

/// Unmixed second partials of [`log_likelihood`].
///
/// The baseline and magnitude components are never positive. Each decay-rate
/// component carries a positive boundary term `theta (horizon - a)^2 exp(-beta (horizon - a))`,
/// so it is negative only when the observed counts outweigh it; with all
/// counts zero it is strictly positive.
pub fn log_likelihood_curvature<C: Observation>(
    params: &IntensityParams,
    counts: &[C],
    delta: f64,
) -> Result<ParamVector, EstimationError> {
    Ok(evaluate(params, counts, delta, false)?.curvature)
}

/// Full Hessian of [`log_likelihood`] in flattened order, row-major.
pub fn log_likelihood_hessian<C: Observation>(
    params: &IntensityParams,
    counts: &[C],
    delta: f64,
) -> Result<Vec<f64>, EstimationError> {
    Ok(evaluate(params, counts, delta, true)?
        .hessian
        .expect("requested"))
}

/// How the ascent direction is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// Each gradient component divided by the magnitude of its own second
    /// partial, or by its expected information where that partial is not
    /// negative.
    Diagonal,
    /// Newton step on the free coordinates when the Hessian block there is
    /// negative definite, otherwise [`StepRule::Diagonal`].
    #[default]
    Newton,
}

/// Settings for [`fit_mle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub delta: f64,
    /// Known event times, multiples of `delta` inside the observed horizon.
    /// Empty fits the baseline alone.
    pub jump_times: Vec<f64>,
    pub theta_floor: f64,
    pub beta_floor: f64,
    pub tol_grad: f64,
    pub max_iters: usize,
    pub multistart: usize,
    pub seed: u64,
    pub step_rule: StepRule,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            delta: 1.0,
            jump_times: vec![0.0],
            theta_floor: 1e-8,
            beta_floor: 1e-8,
            tol_grad: 1e-4,
            max_iters: 500,
            multistart: 8,
            seed: 0,
            step_rule: StepRule::default(),
        }
    }
}

impl FitConfig {
    fn validate(&self, days: usize) -> Result<(), EstimationError> {
        let bad = |msg: &str| Err(EstimationError::InvalidConfig(msg.to_string()));
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return bad("day length must be positive");
        }
        if !(self.tol_grad > 0.0) {
            return bad("tol_grad must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if self.multistart == 0 {
            return bad("multistart must be at least 1");
        }
        if !(self.theta_floor > 0.0 && self.beta_floor > 0.0) {
            return bad("parameter floors must be positive");
        }
        let horizon = self.delta * days as f64;
        let mut previous = f64::NEG_INFINITY;
        for &time in &self.jump_times {
            let steps = time / self.delta;
            let on_grid = (steps - steps.round()).abs() <= 1e-9 * steps.abs().max(1.0);
            if !(time >= 0.0 && time < horizon && on_grid && time > previous) {
                return Err(EstimationError::InvalidJumpTime { time, horizon });
            }
            previous = time;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleResult {
    pub params: IntensityParams,
    pub log_likelihood: f64,
    /// Norm of the projected gradient at `params`.
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restart_index: usize,
    pub warnings: Vec<String>,
    /// Log-likelihood at the start of the winning restart, then after each
    /// of its accepted steps (accumulated from per-step gains).
    #[serde(skip)]
    pub trace: Vec<f64>,
}

fn lower_bounds(config: &FitConfig) -> Vec<f64> {
    let mut lb = vec![0.0];
    for _ in &config.jump_times {
        lb.push(config.theta_floor);
        lb.push(config.beta_floor);
    }
    lb
}

/// Gradient with components zeroed where the point sits on a lower bound and
/// the gradient pushes outward.
fn project_gradient(grad: &[f64], x: &[f64], lb: &[f64]) -> Vec<f64> {
    grad.iter()
        .zip(x.iter().zip(lb))
        .map(|(&g, (&xi, &l))| if xi <= l && g < 0.0 { 0.0 } else { g })
        .collect()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Objective<'a, C: Observation> {
    counts: &'a [C],
    delta: f64,
    times: &'a [f64],
}

impl<C: Observation> Objective<'_, C> {
    fn eval(&self, x: &[f64], with_hessian: bool) -> Result<Evaluation, EstimationError> {
        let params = params_from_vec(x, self.times)?;
        evaluate(&params, self.counts, self.delta, with_hessian)
    }

    /// `None` where the point is infeasible.
    fn value(&self, x: &[f64]) -> Option<f64> {
        let params = params_from_vec(x, self.times).ok()?;
        log_likelihood(&params, self.counts, self.delta)
            .ok()
            .filter(|v| v.is_finite())
    }

    /// Expected count per day; `None` where the point is infeasible.
    fn means(&self, x: &[f64]) -> Option<Vec<f64>> {
        let params = params_from_vec(x, self.times).ok()?;
        Some(
            (1..=self.counts.len())
                .map(|i| params.integrated_intensity(i, self.delta))
                .collect(),
        )
    }

    /// `L(to) - L(from)` summed day by day from the change in each day's
    /// mean, which keeps digits that differencing two totals would lose.
    /// `None` where `to` is infeasible or makes an observation impossible.
    fn gain(&self, from: &[f64], to: &[f64]) -> Option<f64> {
        let mut total = 0.0;
        for ((c, &d0), &d1) in self.counts.iter().zip(from).zip(to) {
            let Some(n) = c.observed() else { continue };
            let shift = d1 - d0;
            if n == 0 {
                total -= shift;
            } else if d1 > 0.0 {
                total += n as f64 * (shift / d0).ln_1p() - shift;
            } else {
                return None;
            }
        }
        total.is_finite().then_some(total)
    }
}

fn diagonal_direction(ev: &Evaluation, grad: &[f64]) -> Vec<f64> {
    let curv = ev.curvature.to_vec();
    let fish = ev.fisher.to_vec();
    grad.iter()
        .zip(curv.iter().zip(&fish))
        .map(|(&g, (&c, &f))| {
            let scale = if c < 0.0 {
                -c
            } else if f > 0.0 {
                f
            } else {
                1.0
            };
            g / scale
        })
        .collect()
}

/// Solves `(-H) d = g` on the free coordinates.
fn newton_direction(ev: &Evaluation, grad: &[f64], free: &[bool]) -> Option<Vec<f64>> {
    let h = ev.hessian.as_ref()?;
    let n = grad.len();
    let idx: Vec<usize> = (0..n).filter(|&i| free[i]).collect();
    let k = idx.len();
    if k == 0 {
        return None;
    }
    let mut a = vec![0.0; k * k];
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            a[r * k + c] = -h[i * n + j];
        }
    }
    // equilibrate: parameters differ by many orders of magnitude
    let mut scale = Vec::with_capacity(k);
    for r in 0..k {
        let d = a[r * k + r];
        if !(d > 0.0 && d.is_finite()) {
            return None;
        }
        scale.push(1.0 / d.sqrt());
    }
    for r in 0..k {
        for c in 0..k {
            a[r * k + c] *= scale[r] * scale[c];
        }
    }
    let chol = cholesky(&a, k)?;
    let rhs: Vec<f64> = idx.iter().zip(&scale).map(|(&i, s)| grad[i] * s).collect();
    let y = cholesky_solve(&chol, k, &rhs);
    let mut d = vec![0.0; n];
    for (r, &i) in idx.iter().enumerate() {
        d[i] = y[r] * scale[r];
    }
    d.iter().all(|v| v.is_finite()).then_some(d)
}

fn cholesky(a: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= l[i * k + p] * l[j * k + p];
            }
            if i == j {
                if s <= 1e-12 {
                    return None;
                }
                l[i * k + i] = s.sqrt();
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], k: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..k {
        for p in 0..i {
            y[i] -= l[i * k + p] * y[p];
        }
        y[i] /= l[i * k + i];
    }
    for i in (0..k).rev() {
        for p in i + 1..k {
            y[i] -= l[p * k + i] * y[p];
        }
        y[i] /= l[i * k + i];
    }
    y
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

struct Ascent {
    x: Vec<f64>,
    value: f64,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
    /// Stopped because no step made progress, before `max_iters`.
    stalled: bool,
    trace: Vec<f64>,
}

/// Projected ascent with Armijo backtracking along the projection arc.
fn ascend<C: Observation>(
    objective: &Objective<'_, C>,
    start: Vec<f64>,
    lb: &[f64],
    config: &FitConfig,
) -> Result<Ascent, EstimationError> {
    let newton = config.step_rule == StepRule::Newton;
    let mut x = start;
    let mut ev = objective.eval(&x, newton)?;
    let mut means = objective.means(&x).expect("start point is feasible");
    let mut trace = vec![ev.value];
    let mut iterations = 0;
    loop {
        let grad = ev.gradient.to_vec();
        let pg = project_gradient(&grad, &x, lb);
        let grad_norm = l2(&pg);
        let done = |converged, stalled, iterations, x, trace| Ascent {
            x,
            value: ev.value,
            grad_norm,
            iterations,
            converged,
            stalled,
            trace,
        };
        if grad_norm <= config.tol_grad {
            return Ok(done(true, false, iterations, x, trace));
        }
        if iterations >= config.max_iters {
            return Ok(done(false, false, iterations, x, trace));
        }
        let free: Vec<bool> = pg.iter().map(|&g| g != 0.0).collect();
        let direction = newton
            .then(|| newton_direction(&ev, &grad, &free))
            .flatten()
            .filter(|d| dot(d, &pg) > 0.0)
            .unwrap_or_else(|| diagonal_direction(&ev, &pg));

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x
                .iter()
                .zip(&direction)
                .zip(lb)
                .map(|((&xi, &di), &l)| (xi + step * di).max(l))
                .collect();
            if let Some(trial_means) = objective.means(&trial) {
                if let Some(gain) = objective.gain(&means, &trial_means) {
                    let moved: Vec<f64> = trial.iter().zip(&x).map(|(t, xi)| t - xi).collect();
                    // a step that rounds away to nothing is no progress
                    if gain > 0.0 && gain >= ARMIJO * dot(&grad, &moved) {
                        accepted = Some((trial, trial_means, gain));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        iterations += 1;
        let Some((next, next_means, gain)) = accepted else {
            // no ascent left at working precision
            return Ok(done(false, true, iterations, x, trace));
        };
        x = next;
        means = next_means;
        ev = objective.eval(&x, newton)?;
        let last = *trace.last().expect("trace starts non-empty");
        trace.push(last + gain);
    }
}

/// Higher likelihood wins; runs that agree to rounding are ranked by
/// convergence and then by gradient norm.
fn preferred(run: &Ascent, incumbent: &Ascent) -> bool {
    let noise = 1e-12 * (1.0 + run.value.abs().max(incumbent.value.abs()));
    if (run.value - incumbent.value).abs() > noise {
        return run.value > incumbent.value;
    }
    if run.converged != incumbent.converged {
        return run.converged;
    }
    run.grad_norm < incumbent.grad_norm
}

fn initial_point<C: Observation>(
    counts: &[C],
    config: &FitConfig,
    lambda0: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let mut x = vec![lambda0];
    for &time in &config.jump_times {
        let jump_day = (time / config.delta).round() as usize + 1;
        let at_jump = counts[jump_day - 1..]
            .iter()
            .find_map(|c| c.observed())
            .map_or(lambda0 * config.delta, |n| n as f64);
        let spread: f64 = rng.random_range(0.5..2.0);
        let theta = (at_jump - lambda0 * config.delta).max(1.0) * spread;
        let beta: f64 = rng.random_range(0.01..0.5);
        x.push(theta.max(config.theta_floor));
        x.push(beta.max(config.beta_floor));
    }
    x
}

/// Maximum-likelihood fit with known event times.
///
/// Runs `multistart` projected-ascent restarts from randomized starting
/// points and returns the one with the highest log-likelihood. A result that
/// hit `max_iters` or stalled is still returned, with `converged == false`.
pub fn fit_mle<C: Observation>(
    counts: &[C],
    config: &FitConfig,
) -> Result<MleResult, EstimationError> {
    config.validate(counts.len())?;
    let observed: Vec<u64> = counts.iter().filter_map(|c| c.observed()).collect();
    let free = 1 + 2 * config.jump_times.len();
    if observed.len() < free {
        return Err(EstimationError::InsufficientData {
            needed: free,
            available: observed.len(),
        });
    }
    let objective = Objective {
        counts,
        delta: config.delta,
        times: &config.jump_times,
    };
    let lb = lower_bounds(config);

    if observed.iter().all(|&n| n == 0) {
        let mut x = lb.clone();
        for j in 0..config.jump_times.len() {
            x[2 + 2 * j] = 1.0;
        }
        let ev = objective.eval(&x, false)?;
        let grad_norm = l2(&project_gradient(&ev.gradient.to_vec(), &x, &lb));
        return Ok(MleResult {
            params: params_from_vec(&x, &config.jump_times)?,
            log_likelihood: ev.value,
            grad_norm,
            iterations: 0,
            converged: grad_norm <= config.tol_grad,
            restart_index: 0,
            warnings: vec!["all counts are zero; returning the lambda = 0 boundary".into()],
            trace: vec![ev.value],
        });
    }

    let min_count = *observed.iter().min().expect("non-empty");
    let mut lambda0 = min_count as f64 / config.delta;
    let mut warnings = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<(usize, Ascent)> = None;
    for restart in 0..config.multistart {
        let mut start = initial_point(counts, config, lambda0, &mut rng);
        if objective.value(&start).is_none() {
            // positive counts before the first event need a positive baseline
            let smallest_positive = observed
                .iter()
                .copied()
                .filter(|&n| n > 0)
                .min()
                .unwrap_or(1);
            lambda0 = 0.5 * smallest_positive as f64 / config.delta;
            start[0] = lambda0;
            if restart == 0 {
                warnings.push(format!(
                    "starting baseline raised to {lambda0} for feasibility"
                ));
            }
        }
        let run = ascend(&objective, start, &lb, config)?;
        let better = best.as_ref().is_none_or(|(_, b)| preferred(&run, b));
        if better {
            best = Some((restart, run));
        }
    }
    let (restart_index, run) = best.expect("multistart >= 1");
    if run.stalled {
        warnings.push(format!(
            "stalled at working precision with projected gradient norm {:.3e} above tol_grad {}",
            run.grad_norm, config.tol_grad
        ));
    } else if !run.converged {
        warnings.push(format!(
            "did not reach tol_grad {} within {} iterations (projected gradient norm {:.3e})",
            config.tol_grad, config.max_iters, run.grad_norm
        ));
    }
    Ok(MleResult {
        params: params_from_vec(&run.x, &config.jump_times)?,
        log_likelihood: run.value,
        grad_norm: run.grad_norm,
        iterations: run.iterations,
        converged: run.converged,
        restart_index,
        warnings,
        trace: run.trace,
    })
}

/// Day (1-based) with the largest relative day-over-day increase among days
/// `min_gap + 1 ..= T`, earliest on ties. `None` when no day increases.
///
/// The event behind a jump detected on day `d` starts at time `(d - 1) * delta`.
pub fn detect_jump_time<C: Observation>(
    counts: &[C],
    min_gap: usize,
) -> Result<Option<usize>, EstimationError> {
    if counts.len() < min_gap + 2 {
        return Err(EstimationError::InsufficientData {
            needed: min_gap + 2,
            available: counts.len(),
        });
    }
    let mut best: Option<(usize, f64)> = None;
    for day in (min_gap + 1).max(2)..=counts.len() {
        let (Some(prev), Some(cur)) = (counts[day - 2].observed(), counts[day - 1].observed())
        else {
            continue;
        };
        if cur <= prev {
            continue;
        }
        let score = (cur - prev) as f64 / prev.max(1) as f64;
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((day, score));
        }
    }
    Ok(best.map(|(day, _)| day))
}

/// Days used by [`fit_log_linear`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressionWindow {
    /// Every observed day.
    #[default]
    Full,
    /// Days `first..=last`, 1-based.
    Days { first: usize, last: usize },
    /// From the last day attaining the series maximum to the end.
    FromFinalPeak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    /// Change in log streams per day.
    pub slope: f64,
    pub intercept: f64,
    /// `-slope`: positive means decay.
    pub decay_rate: f64,
    pub r_squared: f64,
    /// Constant log counts; `r_squared` is reported as 0.
    pub degenerate: bool,
    pub window: (usize, usize),
    pub n_points: usize,
}

/// Ordinary least squares of `ln n_i` on the day index `i` over the window.
/// Unobserved days and zero counts are skipped.
pub fn fit_log_linear<C: Observation>(
    counts: &[C],
    window: RegressionWindow,
) -> Result<RegressionResult, EstimationError> {
    let len = counts.len();
    let (first, last) = match window {
        RegressionWindow::Full => (1, len),
        RegressionWindow::Days { first, last } => (first, last),
        RegressionWindow::FromFinalPeak => {
            let peak = counts
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.observed().map(|n| (i + 1, n)))
                .fold(None, |best: Option<(usize, u64)>, (day, n)| match best {
                    Some((_, m)) if n < m => best,
                    _ => Some((day, n)),
                });
            (peak.map_or(1, |(day, _)| day), len)
        }
    };
    if first == 0 || first > last || last > len {
        return Err(EstimationError::InvalidWindow { first, last, len });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = (first..=last)
        .filter_map(|day| match counts[day - 1].observed() {
            Some(n) if n > 0 => Some((day as f64, (n as f64).ln())),
            _ => None,
        })
        .unzip();
    let fit = linear_fit(&xs, &ys).ok_or(EstimationError::InsufficientData {
        needed: 2,
        available: xs.len(),
    })?;
    Ok(RegressionResult {
        slope: fit.slope,
        intercept: fit.intercept,
        decay_rate: 0.0 - fit.slope,
        r_squared: fit.r_squared,
        degenerate: fit.degenerate,
        window: (first, last),
        n_points: fit.n_points,
    })
}
