//! Daily top-N chart ingestion.
//!
//! A chart file is delimited text with one row per (date, position). Column
//! order is free and header names are matched case-insensitively; the
//! accepted spellings are listed in [`ColumnMap`]. Dates are ISO-8601
//! calendar days taken verbatim from the file (the chart day boundary of the
//! source data is not re-applied).

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Identity of a song: exact (title, artist) after NFC normalization and
/// whitespace trimming.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SongKey {
    pub title: String,
    pub artist: String,
}

impl SongKey {
    pub fn new(title: &str, artist: &str) -> Self {
        Self {
            title: normalize(title),
            artist: normalize(artist),
        }
    }

    /// Parses the `title::artist` selector form used on the command line.
    pub fn parse_selector(selector: &str) -> Option<Self> {
        let (title, artist) = selector.rsplit_once("::")?;
        Some(Self::new(title, artist))
    }
}

impl fmt::Display for SongKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}::{}", self.title, self.artist)
    }
}

fn normalize(s: &str) -> String {
    s.trim().nfc().collect::<String>().trim().to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartEntry {
    pub date: NaiveDate,
    pub position: u32,
    pub key: SongKey,
    pub streams: u64,
}

/// One appearance of a song on the chart. `day` indexes [`ChartDataset::days`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Appearance {
    pub day: usize,
    pub position: u32,
    pub streams: u64,
}

/// A run of calendar days missing between two consecutive chart days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarGap {
    pub after: NaiveDate,
    pub before: NaiveDate,
    pub missing_days: i64,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing required column `{0}` in header")]
    MissingColumn(&'static str),
    #[error("row {row}: {message}")]
    MalformedRow { row: u64, message: String },
    #[error("row {row}: duplicate position {position} on {date}")]
    DuplicatePosition {
        row: u64,
        date: NaiveDate,
        position: u32,
    },
    #[error("row {row}: position {position} on {date} outside [1, {chart_size}]")]
    PositionOutOfRange {
        row: u64,
        date: NaiveDate,
        position: u32,
        chart_size: u32,
    },
    #[error("dates without exactly {chart_size} rows: {}", format_incomplete(.dates))]
    IncompleteDays {
        chart_size: u32,
        dates: Vec<(NaiveDate, usize)>,
    },
    #[error("chart size must be at least 1")]
    InvalidChartSize,
    #[error("dataset contains no rows")]
    Empty,
    #[error("song not found: {0}")]
    UnknownSong(SongKey),
    #[error("invalid dataset: {0}")]
    Inconsistent(String),
}

fn format_incomplete(dates: &[(NaiveDate, usize)]) -> String {
    dates
        .iter()
        .map(|(d, n)| format!("{d} ({n} rows)"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Non-fatal findings from parsing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum IngestWarning {
    /// Streams increase with position somewhere on this date.
    NonMonotoneStreams { date: NaiveDate, position: u32 },
}

impl fmt::Display for IngestWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IngestWarning::NonMonotoneStreams { date, position } => write!(
                f,
                "{date}: streams at position {position} exceed the position above it"
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParsedChart {
    pub dataset: ChartDataset,
    pub warnings: Vec<IngestWarning>,
}

/// Validated daily chart. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartDataset {
    chart_size: u32,
    days: Vec<NaiveDate>,
    entries: Vec<Vec<ChartEntry>>,
    song_index: BTreeMap<SongKey, Vec<Appearance>>,
    gaps: Vec<CalendarGap>,
}

/// Header names accepted for each required column (lower-cased).
pub struct ColumnMap;

impl ColumnMap {
    pub const DATE: &'static [&'static str] = &["date"];
    pub const POSITION: &'static [&'static str] = &["position", "rank"];
    pub const TRACK: &'static [&'static str] =
        &["track", "track name", "track_name", "title", "song"];
    pub const ARTIST: &'static [&'static str] = &["artist"];
    pub const STREAMS: &'static [&'static str] = &["streams"];
}

fn find_column(
    header: &csv::StringRecord,
    names: &[&str],
    label: &'static str,
) -> Result<usize, IngestError> {
    header
        .iter()
        .position(|h| {
            let h = h.trim_start_matches('\u{feff}').trim().to_lowercase();
            names.contains(&h.as_str())
        })
        .ok_or(IngestError::MissingColumn(label))
}

/// Parses and validates a chart CSV.
pub fn parse_chart_csv<R: Read>(raw: R, chart_size: u32) -> Result<ParsedChart, IngestError> {
    if chart_size == 0 {
        return Err(IngestError::InvalidChartSize);
    }
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::Fields)
        .from_reader(raw);
    let header = reader.headers()?.clone();
    let cols = [
        find_column(&header, ColumnMap::DATE, "date")?,
        find_column(&header, ColumnMap::POSITION, "position")?,
        find_column(&header, ColumnMap::TRACK, "track")?,
        find_column(&header, ColumnMap::ARTIST, "artist")?,
        find_column(&header, ColumnMap::STREAMS, "streams")?,
    ];
    let arity = header.len();

    let mut by_date: BTreeMap<NaiveDate, BTreeMap<u32, ChartEntry>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        // header is line 1
        let row = i as u64 + 2;
        if record.len() != arity {
            return Err(IngestError::MalformedRow {
                row,
                message: format!("expected {arity} fields, found {}", record.len()),
            });
        }
        let field = |c: usize| record.get(c).unwrap_or("");
        let date = NaiveDate::parse_from_str(field(cols[0]), "%Y-%m-%d").map_err(|e| {
            IngestError::MalformedRow {
                row,
                message: format!("bad date {:?}: {e}", field(cols[0])),
            }
        })?;
        let position: u32 = field(cols[1])
            .parse()
            .map_err(|_| IngestError::MalformedRow {
                row,
                message: format!("bad position {:?}", field(cols[1])),
            })?;
        let streams: u64 = field(cols[4])
            .parse()
            .map_err(|_| IngestError::MalformedRow {
                row,
                message: format!("bad streams {:?}", field(cols[4])),
            })?;
        if position == 0 || position > chart_size {
            return Err(IngestError::PositionOutOfRange {
                row,
                date,
                position,
                chart_size,
            });
        }
        let entry = ChartEntry {
            date,
            position,
            key: SongKey::new(field(cols[2]), field(cols[3])),
            streams,
        };
        let day = by_date.entry(date).or_default();
        if day.insert(position, entry).is_some() {
            return Err(IngestError::DuplicatePosition {
                row,
                date,
                position,
            });
        }
    }

    let incomplete: Vec<(NaiveDate, usize)> = by_date
        .iter()
        .filter(|(_, rows)| rows.len() != chart_size as usize)
        .map(|(d, rows)| (*d, rows.len()))
        .collect();
    if !incomplete.is_empty() {
        return Err(IngestError::IncompleteDays {
            chart_size,
            dates: incomplete,
        });
    }

    let mut warnings = Vec::new();
    let mut days = Vec::with_capacity(by_date.len());
    let mut entries = Vec::with_capacity(by_date.len());
    for (date, rows) in by_date {
        let rows: Vec<ChartEntry> = rows.into_values().collect();
        for pair in rows.windows(2) {
            if pair[1].streams > pair[0].streams {
                warnings.push(IngestWarning::NonMonotoneStreams {
                    date,
                    position: pair[1].position,
                });
            }
        }
        days.push(date);
        entries.push(rows);
    }
    let dataset = ChartDataset::from_days(chart_size, days, entries)?;
    Ok(ParsedChart { dataset, warnings })
}

/// Writes a dataset back out in the ingest schema.
pub fn write_chart_csv<W: Write>(dataset: &ChartDataset, out: W) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["date", "position", "track", "artist", "streams"])?;
    for entry in dataset.entries().iter().flatten() {
        writer.write_record([
            entry.date.format("%Y-%m-%d").to_string(),
            entry.position.to_string(),
            entry.key.title.clone(),
            entry.key.artist.clone(),
            entry.streams.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

impl ChartDataset {
    /// Builds a dataset from per-day rows already sorted by position.
    pub fn from_days(
        chart_size: u32,
        days: Vec<NaiveDate>,
        entries: Vec<Vec<ChartEntry>>,
    ) -> Result<Self, IngestError> {
        if days.is_empty() {
            return Err(IngestError::Empty);
        }
        if days.len() != entries.len() {
            return Err(IngestError::Inconsistent(
                "day count does not match entry groups".into(),
            ));
        }
        let mut gaps = Vec::new();
        for pair in days.windows(2) {
            let step = (pair[1] - pair[0]).num_days();
            if step <= 0 {
                return Err(IngestError::Inconsistent(format!(
                    "days not strictly increasing at {}",
                    pair[1]
                )));
            }
            if step > 1 {
                gaps.push(CalendarGap {
                    after: pair[0],
                    before: pair[1],
                    missing_days: step - 1,
                });
            }
        }
        let mut song_index: BTreeMap<SongKey, Vec<Appearance>> = BTreeMap::new();
        for (day, rows) in entries.iter().enumerate() {
            if rows.len() != chart_size as usize {
                return Err(IngestError::IncompleteDays {
                    chart_size,
                    dates: vec![(days[day], rows.len())],
                });
            }
            for (slot, entry) in rows.iter().enumerate() {
                if entry.position as usize != slot + 1 || entry.date != days[day] {
                    return Err(IngestError::Inconsistent(format!(
                        "{}: rows must carry positions 1..={chart_size} in order",
                        days[day]
                    )));
                }
                song_index
                    .entry(entry.key.clone())
                    .or_default()
                    .push(Appearance {
                        day,
                        position: entry.position,
                        streams: entry.streams,
                    });
            }
        }
        Ok(Self {
            chart_size,
            days,
            entries,
            song_index,
            gaps,
        })
    }

    pub fn chart_size(&self) -> u32 {
        self.chart_size
    }

    pub fn days(&self) -> &[NaiveDate] {
        &self.days
    }

    pub fn day_count(&self) -> usize {
        self.days.len()
    }

    pub fn entries(&self) -> &[Vec<ChartEntry>] {
        &self.entries
    }

    /// Rows for one chart day, ordered by position.
    pub fn day_entries(&self, day: usize) -> &[ChartEntry] {
        &self.entries[day]
    }

    pub fn gaps(&self) -> &[CalendarGap] {
        &self.gaps
    }

    pub fn song_count(&self) -> usize {
        self.song_index.len()
    }

    pub fn songs(&self) -> impl Iterator<Item = &SongKey> {
        self.song_index.keys()
    }

    pub fn song_index(&self) -> &BTreeMap<SongKey, Vec<Appearance>> {
        &self.song_index
    }

    pub fn appearances(&self, key: &SongKey) -> Result<&[Appearance], IngestError> {
        self.song_index
            .get(key)
            .map(Vec::as_slice)
            .ok_or_else(|| IngestError::UnknownSong(key.clone()))
    }

    /// Best (numerically smallest) position the song ever reached.
    pub fn peak_rank(&self, key: &SongKey) -> Result<u32, IngestError> {
        Ok(self
            .appearances(key)?
            .iter()
            .map(|a| a.position)
            .min()
            .expect("indexed songs have at least one appearance"))
    }
}

/// One song's daily stream counts over calendar days, from first to last
/// appearance. `None` marks a day the song was not on the chart (or the
/// chart itself was not observed).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailySeries {
    pub key: SongKey,
    pub start_day: NaiveDate,
    pub counts: Vec<Option<u64>>,
}

impl DailySeries {
    /// Number of calendar days spanned.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn present_days(&self) -> usize {
        self.counts.iter().filter(|c| c.is_some()).count()
    }
}

pub fn extract_song_series(
    dataset: &ChartDataset,
    key: &SongKey,
) -> Result<DailySeries, IngestError> {
    let apps = dataset.appearances(key)?;
    let start = dataset.days[apps[0].day];
    let end = dataset.days[apps[apps.len() - 1].day];
    let span = (end - start).num_days() as usize + 1;
    let mut counts = vec![None; span];
    for a in apps {
        let offset = (dataset.days[a.day] - start).num_days() as usize;
        counts[offset] = Some(a.streams);
    }
    Ok(DailySeries {
        key: key.clone(),
        start_day: start,
        counts,
    })
}

/// Number of consecutive chart days, starting at the song's first appearance,
/// on which it appears. Calendar days missing from the dataset are skipped
/// over without ending the run and are not counted.
pub fn first_life(dataset: &ChartDataset, key: &SongKey) -> Result<usize, IngestError> {
    Ok(first_life_of(dataset.appearances(key)?))
}

fn first_life_of(apps: &[Appearance]) -> usize {
    // consecutive dataset-day indices are consecutive observed chart days
    let mut run = 1;
    for pair in apps.windows(2) {
        if pair[1].day != pair[0].day + 1 {
            break;
        }
        run += 1;
    }
    run
}

pub const DURATION_THRESHOLDS: [usize; 4] = [1, 7, 30, 365];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationSummary {
    /// first-life length → number of songs
    pub histogram: BTreeMap<usize, usize>,
    pub song_count: usize,
    /// Fractions of songs with first life ≤ 1, 7, 30 and 365 days.
    pub fractions: [f64; 4],
}

pub fn duration_summary(dataset: &ChartDataset) -> DurationSummary {
    let mut histogram = BTreeMap::new();
    for apps in dataset.song_index.values() {
        *histogram.entry(first_life_of(apps)).or_insert(0) += 1;
    }
    let song_count = dataset.song_count();
    let mut fractions = [0.0; 4];
    for (f, &limit) in fractions.iter_mut().zip(DURATION_THRESHOLDS.iter()) {
        let within: usize = histogram.range(..=limit).map(|(_, n)| n).sum();
        *f = within as f64 / song_count as f64;
    }
    DurationSummary {
        histogram,
        song_count,
        fractions,
    }
}

/// All first-life lengths, keyed by song.
pub fn first_lives(dataset: &ChartDataset) -> BTreeMap<SongKey, usize> {
    dataset
        .song_index
        .iter()
        .map(|(k, apps)| (k.clone(), first_life_of(apps)))
        .collect()
}
