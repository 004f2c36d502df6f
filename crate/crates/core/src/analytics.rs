//! Descriptive statistics over a whole chart: stream level by rank, the
//! rank/stream power law, turnover per rank, first-life by peak rank, the
//! number-one timeline, weekday profile, and decay rate by peak rank.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::RegressionResult;
use crate::ingest::{first_lives, ChartDataset, SongKey};
use crate::stats::{linear_fit, mean, variance};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("mean streams at rank {rank} is {value}; a power law needs positive values")]
    NonPositiveMean { rank: usize, value: f64 },
    #[error("rank {rank} outside [1, {chart_size}]")]
    RankOutOfRange { rank: u32, chart_size: u32 },
    #[error("need at least {needed} days, dataset has {available}")]
    TooFewDays { needed: usize, available: usize },
    #[error("need at least two ranks to fit")]
    TooFewRanks,
}

/// Mean and population standard deviation of streams at each rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankProfile {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub samples: usize,
}

pub fn rank_stream_stats(dataset: &ChartDataset) -> RankProfile {
    let n = dataset.chart_size() as usize;
    let mut columns = vec![Vec::with_capacity(dataset.day_count()); n];
    for day in dataset.entries() {
        for (slot, entry) in day.iter().enumerate() {
            columns[slot].push(entry.streams as f64);
        }
    }
    RankProfile {
        means: columns.iter().map(|c| mean(c)).collect(),
        stds: columns.iter().map(|c| variance(c).sqrt()).collect(),
        samples: dataset.day_count(),
    }
}

/// `mean(rank) = a * rank^(-b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
}

impl PowerLawFit {
    pub fn eval(&self, rank: f64) -> f64 {
        self.a * rank.powf(-self.b)
    }
}

fn positive_means(profile: &RankProfile) -> Result<(), AnalyticsError> {
    if profile.means.len() < 2 {
        return Err(AnalyticsError::TooFewRanks);
    }
    match profile.means.iter().position(|&m| !(m > 0.0)) {
        Some(i) => Err(AnalyticsError::NonPositiveMean {
            rank: i + 1,
            value: profile.means[i],
        }),
        None => Ok(()),
    }
}

/// Least squares of `ln mean` on `ln rank`; R² is in log-log space.
pub fn fit_power_law(profile: &RankProfile) -> Result<PowerLawFit, AnalyticsError> {
    positive_means(profile)?;
    let xs: Vec<f64> = (1..=profile.means.len()).map(|r| (r as f64).ln()).collect();
    let ys: Vec<f64> = profile.means.iter().map(|m| m.ln()).collect();
    let fit = linear_fit(&xs, &ys).ok_or(AnalyticsError::TooFewRanks)?;
    Ok(PowerLawFit {
        a: fit.intercept.exp(),
        b: 0.0 - fit.slope,
        r_squared: fit.r_squared,
    })
}

/// Levenberg-Marquardt least squares on the raw means, started from the
/// log-log fit. R² is on the raw scale.
pub fn fit_power_law_nls(profile: &RankProfile) -> Result<PowerLawFit, AnalyticsError> {
    let start = fit_power_law(profile)?;
    let ranks: Vec<f64> = (1..=profile.means.len()).map(|r| r as f64).collect();
    let ys = &profile.means;
    let sse = |a: f64, b: f64| -> f64 {
        ranks
            .iter()
            .zip(ys)
            .map(|(&r, &y)| {
                let e = y - a * r.powf(-b);
                e * e
            })
            .sum()
    };
    let (mut a, mut b) = (start.a, start.b);
    let mut cost = sse(a, b);
    let mut damping = 1e-3;
    for _ in 0..500 {
        // normal equations in (ln a, b) keep the scale of a out of the system
        let (mut jtj, mut jtr) = ([[0.0; 2]; 2], [0.0; 2]);
        for (&r, &y) in ranks.iter().zip(ys) {
            let f = a * r.powf(-b);
            let j = [f, -f * r.ln()];
            let res = y - f;
            for p in 0..2 {
                jtr[p] += j[p] * res;
                for q in 0..2 {
                    jtj[p][q] += j[p] * j[q];
                }
            }
        }
        let mut improved = false;
        while damping < 1e12 {
            let m00 = jtj[0][0] * (1.0 + damping);
            let m11 = jtj[1][1] * (1.0 + damping);
            let det = m00 * m11 - jtj[0][1] * jtj[1][0];
            let step_ln_a = (m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
            let step_b = (m00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
            let (na, nb) = (a * step_ln_a.exp(), b + step_b);
            let next = sse(na, nb);
            if next.is_finite() && next < cost {
                let rel = (cost - next) / cost.max(f64::MIN_POSITIVE);
                a = na;
                b = nb;
                cost = next;
                damping = (damping * 0.3).max(1e-12);
                improved = rel > 1e-15;
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let m = mean(ys);
    let ss_tot: f64 = ys.iter().map(|y| (y - m) * (y - m)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - cost / ss_tot).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(PowerLawFit { a, b, r_squared })
}

/// Number of distinct songs ever seen at each rank.
pub fn unique_songs_per_rank(dataset: &ChartDataset) -> Vec<usize> {
    let n = dataset.chart_size() as usize;
    let mut seen: Vec<BTreeSet<&SongKey>> = vec![BTreeSet::new(); n];
    for day in dataset.entries() {
        for (slot, entry) in day.iter().enumerate() {
            seen[slot].insert(&entry.key);
        }
    }
    seen.iter().map(BTreeSet::len).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakGroup {
    pub peak_rank: u32,
    pub songs: usize,
    pub mean_first_life: f64,
}

/// `c * exp(-d * rank)` fitted by least squares on `ln(value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpDecayFit {
    pub c: f64,
    pub d: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationByPeak {
    pub groups: Vec<PeakGroup>,
    /// `None` with fewer than two groups.
    pub fit: Option<ExpDecayFit>,
}

pub fn duration_by_peak_rank(dataset: &ChartDataset) -> DurationByPeak {
    let lives = first_lives(dataset);
    let mut by_peak: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for (key, apps) in dataset.song_index() {
        let peak = apps.iter().map(|a| a.position).min().expect("non-empty");
        by_peak.entry(peak).or_default().push(lives[key] as f64);
    }
    let groups: Vec<PeakGroup> = by_peak
        .into_iter()
        .map(|(peak_rank, lives)| PeakGroup {
            peak_rank,
            songs: lives.len(),
            mean_first_life: mean(&lives),
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = groups
        .iter()
        .filter(|g| g.mean_first_life > 0.0)
        .map(|g| (g.peak_rank as f64, g.mean_first_life.ln()))
        .unzip();
    let fit = linear_fit(&xs, &ys).map(|f| ExpDecayFit {
        c: f.intercept.exp(),
        d: 0.0 - f.slope,
        r_squared: f.r_squared,
    });
    DurationByPeak { groups, fit }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelinePoint {
    pub date: NaiveDate,
    pub key: SongKey,
    pub streams: u64,
    /// The number-one song differs from the previous chart day's.
    pub change: bool,
}

pub fn number_one_timeline(dataset: &ChartDataset) -> Vec<TimelinePoint> {
    let mut out: Vec<TimelinePoint> = Vec::with_capacity(dataset.day_count());
    for day in dataset.entries() {
        let top = &day[0];
        let change = out.last().is_some_and(|prev| prev.key != top.key);
        out.push(TimelinePoint {
            date: top.date,
            key: top.key.clone(),
            streams: top.streams,
            change,
        });
    }
    out
}

pub fn distinct_number_ones(timeline: &[TimelinePoint]) -> usize {
    timeline
        .iter()
        .map(|p| &p.key)
        .collect::<BTreeSet<_>>()
        .len()
}

/// Mean streams at one rank for each weekday, Monday first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekdayProfile {
    pub rank: u32,
    /// `None` for a weekday with no chart days.
    pub means: [Option<f64>; 7],
    pub counts: [usize; 7],
}

impl WeekdayProfile {
    pub fn weekday(index: usize) -> Weekday {
        Weekday::try_from(index as u8).expect("index < 7")
    }

    /// Weekday with the largest mean; earliest in the week on ties.
    pub fn peak(&self) -> Option<Weekday> {
        let mut best: Option<(usize, f64)> = None;
        for (i, m) in self.means.iter().enumerate() {
            if let Some(m) = *m {
                if best.is_none_or(|(_, b)| m > b) {
                    best = Some((i, m));
                }
            }
        }
        best.map(|(i, _)| Self::weekday(i))
    }
}

pub fn day_of_week_profile(
    dataset: &ChartDataset,
    rank: u32,
) -> Result<WeekdayProfile, AnalyticsError> {
    if rank == 0 || rank > dataset.chart_size() {
        return Err(AnalyticsError::RankOutOfRange {
            rank,
            chart_size: dataset.chart_size(),
        });
    }
    if dataset.day_count() < 7 {
        return Err(AnalyticsError::TooFewDays {
            needed: 7,
            available: dataset.day_count(),
        });
    }
    let mut sums = [0.0; 7];
    let mut counts = [0usize; 7];
    for day in dataset.entries() {
        let entry = &day[rank as usize - 1];
        let w = entry.date.weekday().num_days_from_monday() as usize;
        sums[w] += entry.streams as f64;
        counts[w] += 1;
    }
    let mut means = [None; 7];
    for w in 0..7 {
        if counts[w] > 0 {
            means[w] = Some(sums[w] / counts[w] as f64);
        }
    }
    Ok(WeekdayProfile {
        rank,
        means,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateGroup {
    pub peak_rank: u32,
    pub songs: usize,
    /// Mean signed regression slope (negative means decay).
    pub mean_slope: f64,
    /// Population variance of the slopes.
    pub variance: f64,
}

/// Groups per-song regression slopes by peak rank. Songs without a
/// regression result are skipped.
pub fn decay_rate_by_peak_rank(
    dataset: &ChartDataset,
    fits: &BTreeMap<SongKey, RegressionResult>,
) -> Vec<RateGroup> {
    let mut by_peak: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for (key, fit) in fits {
        let Ok(peak) = dataset.peak_rank(key) else {
            continue;
        };
        by_peak.entry(peak).or_default().push(fit.slope);
    }
    by_peak
        .into_iter()
        .map(|(peak_rank, slopes)| RateGroup {
            peak_rank,
            songs: slopes.len(),
            mean_slope: mean(&slopes),
            variance: variance(&slopes),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_chart_csv;

    fn dataset(rows: &[(&str, &[(&str, u64)])]) -> ChartDataset {
        let mut s = String::from("date,position,track,artist,streams\n");
        let n = rows[0].1.len();
        for (date, day) in rows {
            for (i, (t, streams)) in day.iter().enumerate() {
                s.push_str(&format!("{date},{},{t},A,{streams}\n", i + 1));
            }
        }
        parse_chart_csv(s.as_bytes(), n as u32).unwrap().dataset
    }

    #[test]
    fn one_day_profile() {
        let ds = dataset(&[("2017-01-01", &[("x", 30), ("y", 20), ("z", 10)])]);
        let p = rank_stream_stats(&ds);
        assert_eq!(p.means, vec![30.0, 20.0, 10.0]);
        assert_eq!(p.stds, vec![0.0; 3]);
        assert_eq!(unique_songs_per_rank(&ds), vec![1, 1, 1]);
    }

    #[test]
    fn two_day_rank_one() {
        let ds = dataset(&[
            ("2017-01-01", &[("x", 100), ("y", 50)]),
            ("2017-01-02", &[("y", 300), ("x", 50)]),
        ]);
        let p = rank_stream_stats(&ds);
        assert_eq!(p.means[0], 200.0);
        assert_eq!(p.stds[0], 100.0);
        assert_eq!(p.samples, 2);
        assert_eq!(unique_songs_per_rank(&ds), vec![2, 2]);
        let timeline = number_one_timeline(&ds);
        assert_eq!(timeline.iter().filter(|p| p.change).count(), 1);
        assert_eq!(distinct_number_ones(&timeline), 2);
    }

    #[test]
    fn exact_power_law() {
        let profile = RankProfile {
            means: (1..=50).map(|r| 2.0 / r as f64).collect(),
            stds: vec![0.0; 50],
            samples: 1,
        };
        let fit = fit_power_law(&profile).unwrap();
        assert!((fit.a - 2.0).abs() < 1e-10);
        assert!((fit.b - 1.0).abs() < 1e-10);
        assert_eq!(fit.r_squared, 1.0);
        let nls = fit_power_law_nls(&profile).unwrap();
        assert!((nls.a - 2.0).abs() < 1e-8 && (nls.b - 1.0).abs() < 1e-8);
    }

    #[test]
    fn constant_means_power_law() {
        let profile = RankProfile {
            means: vec![5.0; 10],
            stds: vec![0.0; 10],
            samples: 1,
        };
        let fit = fit_power_law(&profile).unwrap();
        assert_eq!(fit.b, 0.0);
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn non_positive_mean_rejected() {
        let profile = RankProfile {
            means: vec![5.0, 0.0, 1.0],
            stds: vec![0.0; 3],
            samples: 1,
        };
        assert_eq!(
            fit_power_law(&profile),
            Err(AnalyticsError::NonPositiveMean {
                rank: 2,
                value: 0.0
            })
        );
    }

    #[test]
    fn nls_tracks_raw_scale() {
        // multiplicative noise pattern: log-log and raw fits disagree slightly
        let means: Vec<f64> = (1..=200)
            .map(|r| 2.4e6 * (r as f64).powf(-0.55) * (1.0 + 0.05 * ((r % 7) as f64 - 3.0) / 3.0))
            .collect();
        let profile = RankProfile {
            means,
            stds: vec![0.0; 200],
            samples: 1,
        };
        let ols = fit_power_law(&profile).unwrap();
        let nls = fit_power_law_nls(&profile).unwrap();
        let sse = |f: &PowerLawFit| -> f64 {
            profile
                .means
                .iter()
                .enumerate()
                .map(|(i, y)| (y - f.eval(i as f64 + 1.0)).powi(2))
                .sum()
        };
        assert!(sse(&nls) <= sse(&ols));
        assert!((nls.b - 0.55).abs() < 0.02);
    }

    #[test]
    fn single_peak_group() {
        let ds = dataset(&[("2017-01-01", &[("x", 10)]), ("2017-01-02", &[("y", 10)])]);
        let d = duration_by_peak_rank(&ds);
        assert_eq!(d.groups.len(), 1);
        assert_eq!(d.groups[0].peak_rank, 1);
        assert!(d.fit.is_none());
    }

    #[test]
    fn weekday_profile_sawtooth() {
        // 2017-01-02 is a Monday
        let start = NaiveDate::from_ymd_opt(2017, 1, 2).unwrap();
        let mut s = String::from("date,position,track,artist,streams\n");
        for d in 0..28u64 {
            let date = start + chrono::Days::new(d);
            s.push_str(&format!("{date},1,x,A,{}\n", 100 + 10 * (d % 7)));
        }
        let ds = parse_chart_csv(s.as_bytes(), 1).unwrap().dataset;
        let p = day_of_week_profile(&ds, 1).unwrap();
        for w in 0..7 {
            assert_eq!(p.means[w], Some(100.0 + 10.0 * w as f64));
        }
        assert_eq!(p.counts.iter().sum::<usize>(), 28);
        assert_eq!(p.peak(), Some(Weekday::Sun));
        assert!(day_of_week_profile(&ds, 2).is_err());
    }

    #[test]
    fn rate_groups() {
        let ds = dataset(&[
            ("2017-01-01", &[("a", 10), ("b", 5)]),
            ("2017-01-02", &[("c", 10), ("b", 5)]),
        ]);
        let fit = |slope: f64| RegressionResult {
            slope,
            intercept: 0.0,
            decay_rate: -slope,
            r_squared: 1.0,
            degenerate: false,
            window: (1, 2),
            n_points: 2,
        };
        let fits = BTreeMap::from([
            (SongKey::new("a", "A"), fit(-0.1)),
            (SongKey::new("c", "A"), fit(-0.3)),
            (SongKey::new("b", "A"), fit(0.2)),
        ]);
        let groups = decay_rate_by_peak_rank(&ds, &fits);
        assert_eq!(groups.len(), 2);
        assert!((groups[0].mean_slope + 0.2).abs() < 1e-15);
        assert!((groups[0].variance - 0.01).abs() < 1e-15);
        assert_eq!(groups[1].variance, 0.0);
    }
}
