use std::collections::BTreeSet;

use chartpulse::analytics::{
    day_of_week_profile, decay_rate_by_peak_rank, distinct_number_ones, duration_by_peak_rank,
    fit_power_law, fit_power_law_nls, number_one_timeline, rank_stream_stats,
    unique_songs_per_rank, WeekdayProfile,
};
use chartpulse::clustering::build_features;
use chartpulse::ingest::{duration_summary, ChartDataset, DURATION_THRESHOLDS};

use super::Finished;
use crate::args::{Analysis, AnalyzeArgs};
use crate::error::CliError;
use crate::load::load;
use crate::output::{Outputs, Table};
use crate::svg::{Chart, Mark, Series};

/// One analysis rendered: its CSV and a chart of the same data.
struct Rendered {
    table: Table,
    chart: Chart,
}

fn chart(title: &str, x: &str, y: &str, log_y: bool, series: Vec<Series>) -> Chart {
    Chart {
        title: title.into(),
        x_label: x.into(),
        y_label: y.into(),
        log_y,
        series,
    }
}

fn series(label: &str, points: Vec<(f64, f64)>, mark: Mark) -> Series {
    Series {
        label: label.into(),
        points,
        mark,
    }
}

pub fn run(args: &AnalyzeArgs) -> Result<Finished, CliError> {
    let loaded = load(&args.dataset)?;
    let wanted: BTreeSet<Analysis> = if args.analyses.contains(&Analysis::All) {
        Analysis::EACH.into_iter().collect()
    } else {
        args.analyses.iter().copied().collect()
    };
    let mut outputs = Outputs::default();
    for analysis in wanted {
        let comments = vec![
            ("analysis", analysis.name().to_string()),
            ("dataset", loaded.id.clone()),
            ("days", loaded.dataset.day_count().to_string()),
        ];
        let rendered = render(analysis, &loaded.dataset, args, comments)?;
        let stem = format!("{}_{}", analysis.name(), loaded.id);
        outputs.write(
            args.out_dir.join(format!("{stem}.csv")),
            &rendered.table.into_bytes(),
        )?;
        if args.svg {
            outputs.write(
                args.out_dir.join(format!("{stem}.svg")),
                rendered.chart.render().as_bytes(),
            )?;
        }
    }
    Ok(Finished {
        outputs,
        manifest: args
            .out_dir
            .join(format!("analyze_{}.manifest.json", loaded.id)),
    })
}

fn render(
    analysis: Analysis,
    ds: &ChartDataset,
    args: &AnalyzeArgs,
    mut comments: Vec<(&'static str, String)>,
) -> Result<Rendered, CliError> {
    Ok(match analysis {
        Analysis::RankStats => {
            let p = rank_stream_stats(ds);
            let mut t = Table::new(&comments, &["rank", "mean_streams", "std_streams"]);
            for (i, (m, s)) in p.means.iter().zip(&p.stds).enumerate() {
                t.row(&[(i + 1).to_string(), m.to_string(), s.to_string()]);
            }
            let pts = |f: &dyn Fn(f64, f64) -> f64| -> Vec<(f64, f64)> {
                p.means
                    .iter()
                    .zip(&p.stds)
                    .enumerate()
                    .map(|(i, (&m, &s))| ((i + 1) as f64, f(m, s)))
                    .collect()
            };
            Rendered {
                table: t,
                chart: chart(
                    "Mean daily streams by rank",
                    "rank",
                    "streams",
                    false,
                    vec![
                        series("mean", pts(&|m, _| m), Mark::Line),
                        series("mean + sd", pts(&|m, s| m + s), Mark::Line),
                        series("mean - sd", pts(&|m, s| m - s), Mark::Line),
                    ],
                ),
            }
        }
        Analysis::PowerLaw => {
            let p = rank_stream_stats(ds);
            let fit = if args.nls {
                fit_power_law_nls(&p)?
            } else {
                fit_power_law(&p)?
            };
            let method = if args.nls {
                "nonlinear least squares"
            } else {
                "log-log ols"
            };
            println!(
                "power law ({method}): a = {}, b = {}, r_squared = {}",
                fit.a, fit.b, fit.r_squared
            );
            comments.push(("model", "mean = a * rank^(-b)".into()));
            comments.push(("method", method.into()));
            comments.push(("a", fit.a.to_string()));
            comments.push(("b", fit.b.to_string()));
            comments.push(("r_squared", fit.r_squared.to_string()));
            let mut t = Table::new(&comments, &["rank", "mean_streams", "fitted"]);
            for (i, m) in p.means.iter().enumerate() {
                let r = (i + 1) as f64;
                t.row(&[(i + 1).to_string(), m.to_string(), fit.eval(r).to_string()]);
            }
            let observed = p
                .means
                .iter()
                .enumerate()
                .map(|(i, &m)| ((i + 1) as f64, m))
                .collect();
            let fitted = (1..=p.means.len())
                .map(|r| (r as f64, fit.eval(r as f64)))
                .collect();
            Rendered {
                table: t,
                chart: chart(
                    "Power-law fit of mean streams",
                    "rank",
                    "streams (log scale)",
                    true,
                    vec![
                        series("mean", observed, Mark::Points),
                        series("fit", fitted, Mark::Line),
                    ],
                ),
            }
        }
        Analysis::UniqueSongs => {
            let u = unique_songs_per_rank(ds);
            let mut t = Table::new(&comments, &["rank", "unique_songs"]);
            for (i, n) in u.iter().enumerate() {
                t.row(&[(i + 1).to_string(), n.to_string()]);
            }
            let pts = u
                .iter()
                .enumerate()
                .map(|(i, &n)| ((i + 1) as f64, n as f64))
                .collect();
            Rendered {
                table: t,
                chart: chart(
                    "Unique songs per rank",
                    "rank",
                    "songs",
                    false,
                    vec![series("unique", pts, Mark::Line)],
                ),
            }
        }
        Analysis::Durations => {
            let s = duration_summary(ds);
            println!("songs: {}", s.song_count);
            for (limit, f) in DURATION_THRESHOLDS.iter().zip(s.fractions) {
                println!("first life <= {limit} days: {:.2}%", 100.0 * f);
                comments.push(("threshold", format!("{limit} days: {f}")));
            }
            comments.push(("songs", s.song_count.to_string()));
            let mut t = Table::new(&comments, &["first_life_days", "songs"]);
            for (len, n) in &s.histogram {
                t.row(&[len.to_string(), n.to_string()]);
            }
            let pts = s
                .histogram
                .iter()
                .map(|(&l, &n)| (l as f64, n as f64))
                .collect();
            Rendered {
                table: t,
                chart: chart(
                    "First-life durations",
                    "days",
                    "songs",
                    false,
                    vec![series("songs", pts, Mark::Points)],
                ),
            }
        }
        Analysis::DurationByPeak => {
            let d = duration_by_peak_rank(ds);
            if let Some(fit) = d.fit {
                println!(
                    "duration = c * exp(-d * peak): c = {}, d = {}, r_squared = {}",
                    fit.c, fit.d, fit.r_squared
                );
                comments.push(("model", "mean_first_life = c * exp(-d * peak_rank)".into()));
                comments.push(("c", fit.c.to_string()));
                comments.push(("d", fit.d.to_string()));
                comments.push(("r_squared", fit.r_squared.to_string()));
            }
            let mut t = Table::new(
                &comments,
                &["peak_rank", "songs", "mean_first_life", "fitted"],
            );
            for g in &d.groups {
                let fitted = d
                    .fit
                    .map(|f| (f.c * (-f.d * g.peak_rank as f64).exp()).to_string())
                    .unwrap_or_default();
                t.row(&[
                    g.peak_rank.to_string(),
                    g.songs.to_string(),
                    g.mean_first_life.to_string(),
                    fitted,
                ]);
            }
            let pts = d
                .groups
                .iter()
                .map(|g| (g.peak_rank as f64, g.mean_first_life))
                .collect();
            let mut lines = vec![series("mean first life", pts, Mark::Points)];
            if let Some(f) = d.fit {
                let curve = d
                    .groups
                    .iter()
                    .map(|g| (g.peak_rank as f64, f.c * (-f.d * g.peak_rank as f64).exp()))
                    .collect();
                lines.push(series("fit", curve, Mark::Line));
            }
            Rendered {
                table: t,
                chart: chart("First life by peak rank", "peak rank", "days", false, lines),
            }
        }
        Analysis::NumberOnes => {
            let tl = number_one_timeline(ds);
            let distinct = distinct_number_ones(&tl);
            let changes = tl.iter().filter(|p| p.change).count();
            println!("distinct number-one songs: {distinct}");
            comments.push(("distinct_songs", distinct.to_string()));
            comments.push(("changes", changes.to_string()));
            let mut t = Table::new(&comments, &["date", "title", "artist", "streams", "change"]);
            for p in &tl {
                t.row(&[
                    p.date.to_string(),
                    p.key.title.clone(),
                    p.key.artist.clone(),
                    p.streams.to_string(),
                    u8::from(p.change).to_string(),
                ]);
            }
            let pts = tl
                .iter()
                .enumerate()
                .map(|(i, p)| (i as f64, p.streams as f64))
                .collect();
            Rendered {
                table: t,
                chart: chart(
                    "Number-one streams",
                    "chart day",
                    "streams",
                    false,
                    vec![series("rank 1", pts, Mark::Line)],
                ),
            }
        }
        Analysis::Weekday => {
            let rank = args.rank.unwrap_or(ds.chart_size());
            let w = day_of_week_profile(ds, rank)?;
            if let Some(peak) = w.peak() {
                println!("rank {rank} weekly peak: {peak}");
                comments.push(("peak_weekday", peak.to_string()));
            }
            comments.push(("rank", rank.to_string()));
            let mut t = Table::new(&comments, &["weekday", "mean_streams", "days"]);
            for i in 0..7 {
                t.row(&[
                    WeekdayProfile::weekday(i).to_string(),
                    w.means[i].map(|m| m.to_string()).unwrap_or_default(),
                    w.counts[i].to_string(),
                ]);
            }
            let pts = (0..7)
                .filter_map(|i| w.means[i].map(|m| ((i + 1) as f64, m)))
                .collect();
            Rendered {
                table: t,
                chart: chart(
                    &format!("Mean streams at rank {rank} by weekday (1 = Monday)"),
                    "weekday",
                    "streams",
                    false,
                    vec![series("mean", pts, Mark::Line)],
                ),
            }
        }
        Analysis::DecayByPeak => {
            let features = build_features(ds, args.min_days)?;
            let groups = decay_rate_by_peak_rank(ds, &features.regressions);
            comments.push(("min_days", args.min_days.to_string()));
            comments.push(("songs", features.regressions.len().to_string()));
            comments.push(("excluded", features.excluded.len().to_string()));
            let mut t = Table::new(&comments, &["peak_rank", "songs", "mean_slope", "variance"]);
            for g in &groups {
                t.row(&[
                    g.peak_rank.to_string(),
                    g.songs.to_string(),
                    g.mean_slope.to_string(),
                    g.variance.to_string(),
                ]);
            }
            let pts = groups
                .iter()
                .map(|g| (g.peak_rank as f64, g.mean_slope))
                .collect();
            Rendered {
                table: t,
                chart: chart(
                    "Mean log-linear slope by peak rank",
                    "peak rank",
                    "slope per day",
                    false,
                    vec![series("mean slope", pts, Mark::Points)],
                ),
            }
        }
        Analysis::All => unreachable!("expanded by the caller"),
    })
}
