//! Independent oracles for the integration and acceptance tests. Nothing in
//! here calls the closed-form or analytic-derivative code paths it is used
//! to check.
#![allow(dead_code)]

use chartpulse::intensity::{DayGrid, IntensityParams, JumpEvent};
use chartpulse::simulation::simulate_daily_counts;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Quadrature of the pointwise intensity over `[start, end]`, split at event
/// times so each piece is smooth.
pub fn quadrature_integral(params: &IntensityParams, start: f64, end: f64) -> f64 {
    let mut cuts = vec![start];
    cuts.extend(
        params
            .events()
            .iter()
            .map(|e| e.time)
            .filter(|&t| t > start && t < end),
    );
    cuts.push(end);
    let f = |t: f64| params.intensity_at(t);
    cuts.windows(2)
        .map(|w| {
            // evaluate just inside the right end so the indicator of an event
            // starting exactly there does not leak in
            let hi = w[1];
            let below_hi = f64::from_bits(hi.to_bits() - 1);
            let g = |t: f64| if t >= hi { f(below_hi) } else { f(t) };
            let scale = f(w[0]).abs() * (w[1] - w[0]);
            adaptive_simpson(&g, w[0], w[1], 1e-14 * scale)
        })
        .sum()
}

/// Product-of-Poisson-pmf log-likelihood with `log n!` summed term by term.
pub fn pmf_log_likelihood(params: &IntensityParams, counts: &[u64], delta: f64) -> f64 {
    counts
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let mean = quadrature_integral(params, delta * i as f64, delta * (i + 1) as f64);
            let log_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
            if n == 0 {
                -mean
            } else {
                n as f64 * mean.ln() - mean - log_fact
            }
        })
        .sum()
}

/// Flattened `[lambda, theta_0, beta_0, ...]` with fixed event times.
pub fn rebuild(values: &[f64], times: &[f64]) -> IntensityParams {
    let events = times
        .iter()
        .enumerate()
        .map(|(j, &a)| JumpEvent::new(a, values[1 + 2 * j], values[2 + 2 * j]).unwrap())
        .collect();
    IntensityParams::new(values[0], events).unwrap()
}

pub fn flatten(params: &IntensityParams) -> Vec<f64> {
    let mut v = vec![params.lambda()];
    for e in params.events() {
        v.push(e.theta);
        v.push(e.beta);
    }
    v
}

pub fn fd_step(value: f64) -> f64 {
    1e-6 * value.abs().max(1.0)
}

/// Per-day change in expected count when coordinate `k` of the flattened
/// parameters moves by `step`, computed from the affected term alone so the
/// difference carries no cancellation against the other terms.
fn day_shifts(params: &IntensityParams, days: usize, delta: f64, k: usize, step: f64) -> Vec<f64> {
    (1..=days)
        .map(|i| {
            let (lo, hi) = (delta * (i - 1) as f64, delta * i as f64);
            if k == 0 {
                return step * delta;
            }
            let e = &params.events()[(k - 1) / 2];
            if k % 2 == 1 {
                step * e.mass_fraction(lo, hi)
            } else {
                let moved = JumpEvent::new(e.time, e.theta, e.beta + step).unwrap();
                e.theta * (moved.mass_fraction(lo, hi) - e.mass_fraction(lo, hi))
            }
        })
        .collect()
}

/// `(L(x + h e_k) - L(x), L(x - h e_k) - L(x))` summed day by day.
fn likelihood_moves(
    params: &IntensityParams,
    counts: &[u64],
    delta: f64,
    k: usize,
    h: f64,
) -> (f64, f64) {
    let base: Vec<f64> = (1..=counts.len())
        .map(|i| params.integrated_intensity(i, delta))
        .collect();
    let up = day_shifts(params, counts.len(), delta, k, h);
    let down = day_shifts(params, counts.len(), delta, k, -h);
    let moved = |shift: &[f64]| -> f64 {
        counts
            .iter()
            .zip(&base)
            .zip(shift)
            .map(|((&n, &d), &s)| n as f64 * (s / d).ln_1p() - s)
            .sum()
    };
    (moved(&up), moved(&down))
}

/// Central first differences of the log-likelihood, step `1e-6 * max(1, |x|)`.
pub fn fd_gradient(params: &IntensityParams, counts: &[u64], delta: f64) -> Vec<f64> {
    let x = flatten(params);
    (0..x.len())
        .map(|k| {
            let h = fd_step(x[k]);
            let (up, down) = likelihood_moves(params, counts, delta, k, h);
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Richardson extrapolation of central first differences from steps `h` and
/// `h / 2`, cancelling the `h^2` truncation term.
pub fn fd_gradient_richardson(params: &IntensityParams, counts: &[u64], delta: f64) -> Vec<f64> {
    let x = flatten(params);
    (0..x.len())
        .map(|k| {
            let central = |h: f64| {
                let (up, down) = likelihood_moves(params, counts, delta, k, h);
                (up - down) / (2.0 * h)
            };
            let h = fd_step(x[k]);
            (4.0 * central(h / 2.0) - central(h)) / 3.0
        })
        .collect()
}

/// Central second differences in each coordinate, Richardson-extrapolated
/// from steps `h` and `h / 2`.
pub fn fd_second(params: &IntensityParams, counts: &[u64], delta: f64) -> Vec<f64> {
    let x = flatten(params);
    (0..x.len())
        .map(|k| {
            let second = |h: f64| {
                let (up, down) = likelihood_moves(params, counts, delta, k, h);
                (up + down) / (h * h)
            };
            // wide step: rounding grows as 1/h^2, truncation is extrapolated
            let h = 1e-3 * x[k].abs().max(1e-2);
            (4.0 * second(h / 2.0) - second(h)) / 3.0
        })
        .collect()
}

/// Independent Poisson sampler for building test data: counts unit-rate
/// exponential gaps below the mean, or a rounded normal for large means.
pub fn reference_poisson(mean: f64, rng: &mut ChaCha8Rng) -> u64 {
    if mean < 50.0 {
        let mut k = 0;
        let mut t = 0.0;
        loop {
            t += -(1.0 - rng.random::<f64>()).ln();
            if t > mean {
                return k;
            }
            k += 1;
        }
    }
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
    (mean + mean.sqrt() * z).round().max(0.0) as u64
}

/// Random model with a baseline and two events, inside the given ranges.
pub fn random_two_event(rng: &mut ChaCha8Rng, days: usize) -> IntensityParams {
    let lambda = 10f64.powf(rng.random_range(3.0..6.0));
    let a = rng.random_range(days / 5..=4 * days / 5) as f64;
    let events = vec![
        JumpEvent::new(
            0.0,
            10f64.powf(rng.random_range(4.0..7.0)),
            rng.random_range(0.01..1.0),
        )
        .unwrap(),
        JumpEvent::new(
            a,
            10f64.powf(rng.random_range(4.0..7.0)),
            rng.random_range(0.01..1.0),
        )
        .unwrap(),
    ];
    IntensityParams::new(lambda, events).unwrap()
}

/// A random feasible parameter point with two sets of daily counts: one
/// simulated from the point itself, one from an independent draw sharing its
/// event times.
pub struct FeasiblePoint {
    pub params: IntensityParams,
    pub own: Vec<u64>,
    pub foreign: Vec<u64>,
}

pub fn feasible_points(seed: u64, n: usize) -> Vec<FeasiblePoint> {
    let mut rng = rng(seed);
    (0..n)
        .map(|_| {
            let days = rng.random_range(30..=400);
            let params = random_two_event(&mut rng, days);
            let times: Vec<f64> = params.events().iter().map(|e| e.time).collect();
            let mut other = flatten(&random_two_event(&mut rng, days));
            other[0] = 10f64.powf(rng.random_range(3.0..6.0));
            let other = rebuild(&other, &times);
            let grid = DayGrid::new(1.0, days).unwrap();
            let own = simulate_daily_counts(&params, grid, rng.random());
            let foreign = simulate_daily_counts(&other, grid, rng.random());
            FeasiblePoint {
                params,
                own,
                foreign,
            }
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smallest k-means objective over every assignment of the points to 2
/// non-empty groups.
pub fn brute_force_two_means(points: &[[f64; 2]]) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    // fix point 0 in group 0 to skip mirrored labelings
    for mask in 0u32..(1 << (n - 1)) {
        let groups: Vec<usize> = (0..n)
            .map(|i| {
                if i == 0 {
                    0
                } else {
                    ((mask >> (i - 1)) & 1) as usize
                }
            })
            .collect();
        if !groups.contains(&1) {
            continue;
        }
        let mut cost = 0.0;
        for g in 0..2 {
            let members: Vec<&[f64; 2]> = points
                .iter()
                .zip(&groups)
                .filter(|(_, &h)| h == g)
                .map(|(p, _)| p)
                .collect();
            let m = members.len() as f64;
            let cx = members.iter().map(|p| p[0]).sum::<f64>() / m;
            let cy = members.iter().map(|p| p[1]).sum::<f64>() / m;
            cost += members
                .iter()
                .map(|p| (p[0] - cx).powi(2) + (p[1] - cy).powi(2))
                .sum::<f64>();
        }
        best = best.min(cost);
    }
    best
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
