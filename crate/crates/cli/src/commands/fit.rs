use chartpulse::estimation::{
    detect_jump_time, fit_log_linear, fit_mle, FitConfig, RegressionWindow, StepRule,
};
use chartpulse::ingest::{extract_song_series, SongKey};
use chartpulse::intensity::IntensityParams;
use chrono::NaiveDate;
use serde::Serialize;

use super::Finished;
use crate::args::{FitArgs, Method};
use crate::error::CliError;
use crate::load::{load, resolve_song};
use crate::output::{json_bytes, slug, Outputs};

#[derive(Debug, Serialize)]
struct SeriesInfo {
    start_date: NaiveDate,
    days: usize,
    observed_days: usize,
}

#[derive(Debug, Serialize)]
struct AutoJump {
    min_gap: usize,
    detected_day: Option<usize>,
}

#[derive(Debug, Serialize)]
struct MleReport {
    song: SongKey,
    method: Method,
    series: SeriesInfo,
    delta: f64,
    /// 1-based series days on which each event starts.
    jump_days: Vec<usize>,
    jump_times: Vec<f64>,
    auto_jump: Option<AutoJump>,
    tol_grad: f64,
    max_iters: usize,
    multistart: usize,
    seed: u64,
    params: IntensityParams,
    log_likelihood: f64,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
    restart_index: usize,
    warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct RegressionReport {
    song: SongKey,
    method: Method,
    series: SeriesInfo,
    window: RegressionWindow,
    first_day: usize,
    last_day: usize,
    slope: f64,
    intercept: f64,
    decay_rate: f64,
    r_squared: f64,
    degenerate: bool,
    n_points: usize,
}

/// Event days: the first chart day, plus any requested or detected days.
fn jump_days(
    args: &FitArgs,
    counts: &[Option<u64>],
) -> Result<(Vec<usize>, Option<AutoJump>), CliError> {
    let mut days = vec![1];
    let mut auto = None;
    if args.auto_jump {
        let detected = detect_jump_time(counts, args.min_gap)?;
        days.extend(detected);
        auto = Some(AutoJump {
            min_gap: args.min_gap,
            detected_day: detected,
        });
    }
    for &d in &args.jump_days {
        if d == 0 || d > counts.len() {
            return Err(CliError::Usage(format!(
                "jump day {d} outside the series (1..={})",
                counts.len()
            )));
        }
        days.push(d);
    }
    days.sort_unstable();
    days.dedup();
    Ok((days, auto))
}

pub fn run(args: &FitArgs) -> Result<Finished, CliError> {
    if !(args.delta.is_finite() && args.delta > 0.0) {
        return Err(CliError::Usage(format!(
            "--delta must be positive, got {}",
            args.delta
        )));
    }
    let loaded = load(&args.dataset)?;
    let key = resolve_song(&loaded.dataset, args.song.as_deref())?;
    let series = extract_song_series(&loaded.dataset, &key)?;
    let info = SeriesInfo {
        start_date: series.start_day,
        days: series.len(),
        observed_days: series.present_days(),
    };
    let counts = &series.counts;

    let report = match args.method {
        Method::Mle => {
            let (days, auto_jump) = jump_days(args, counts)?;
            let jump_times: Vec<f64> = days.iter().map(|&d| (d - 1) as f64 * args.delta).collect();
            let config = FitConfig {
                delta: args.delta,
                jump_times: jump_times.clone(),
                tol_grad: args.tol_grad,
                max_iters: args.max_iters,
                multistart: args.multistart,
                seed: args.seed,
                step_rule: StepRule::Newton,
                ..FitConfig::default()
            };
            let fit = fit_mle(counts, &config)?;
            if !fit.log_likelihood.is_finite() {
                return Err(CliError::Numerical(format!(
                    "log-likelihood at the fit is {}",
                    fit.log_likelihood
                )));
            }
            println!(
                "{key}: lambda = {}, log-likelihood = {}, converged = {}",
                fit.params.lambda(),
                fit.log_likelihood,
                fit.converged
            );
            for (d, e) in days.iter().zip(fit.params.events()) {
                println!("  event day {d}: theta = {}, beta = {}", e.theta, e.beta);
            }
            for w in &fit.warnings {
                eprintln!("warning: {w}");
            }
            json_bytes(&MleReport {
                song: key.clone(),
                method: args.method,
                series: info,
                delta: args.delta,
                jump_days: days,
                jump_times,
                auto_jump,
                tol_grad: args.tol_grad,
                max_iters: args.max_iters,
                multistart: args.multistart,
                seed: args.seed,
                params: fit.params,
                log_likelihood: fit.log_likelihood,
                grad_norm: fit.grad_norm,
                iterations: fit.iterations,
                converged: fit.converged,
                restart_index: fit.restart_index,
                warnings: fit.warnings,
            })
        }
        Method::Regression => {
            let window = if args.from_final_peak {
                RegressionWindow::FromFinalPeak
            } else {
                RegressionWindow::Full
            };
            let fit = fit_log_linear(counts, window)?;
            println!(
                "{key}: decay rate = {}, r_squared = {} over days {}..={}",
                fit.decay_rate, fit.r_squared, fit.window.0, fit.window.1
            );
            json_bytes(&RegressionReport {
                song: key.clone(),
                method: args.method,
                series: info,
                window,
                first_day: fit.window.0,
                last_day: fit.window.1,
                slope: fit.slope,
                intercept: fit.intercept,
                decay_rate: fit.decay_rate,
                r_squared: fit.r_squared,
                degenerate: fit.degenerate,
                n_points: fit.n_points,
            })
        }
    };

    let method = match args.method {
        Method::Mle => "mle",
        Method::Regression => "regression",
    };
    let stem = format!("fit-{method}_{}_{}", loaded.id, slug(&key.to_string()));
    let mut outputs = Outputs::default();
    outputs.write(args.out_dir.join(format!("{stem}.json")), &report)?;
    Ok(Finished {
        outputs,
        manifest: args.out_dir.join(format!("{stem}.manifest.json")),
    })
}
