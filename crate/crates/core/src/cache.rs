//! Versioned binary snapshot of a [`ChartDataset`].
//!
//! Layout (little endian): magic `CPDS`, format version `u32`, chart size
//! `u32`, day count `u32`, then per day the date as days since 0001-01-01
//! (`i32`) followed by `chart_size` rows of `title`, `artist` (each a `u32`
//! byte length plus UTF-8 bytes) and `streams` (`u64`). Positions are implied
//! by row order.

use std::io::{self, Read, Write};

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

use crate::ingest::{ChartDataset, ChartEntry, IngestError, SongKey};

pub const MAGIC: &[u8; 4] = b"CPDS";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("not a dataset cache (bad magic)")]
    BadMagic,
    #[error("cache format version {found} is not supported (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("corrupt cache: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Invalid(#[from] IngestError),
}

pub fn is_cache(bytes: &[u8]) -> bool {
    bytes.starts_with(MAGIC)
}

fn put_str<W: Write>(out: &mut W, s: &str) -> io::Result<()> {
    out.write_all(&(s.len() as u32).to_le_bytes())?;
    out.write_all(s.as_bytes())
}

pub fn write_cache<W: Write>(dataset: &ChartDataset, mut out: W) -> Result<(), CacheError> {
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&dataset.chart_size().to_le_bytes())?;
    out.write_all(&(dataset.day_count() as u32).to_le_bytes())?;
    for (date, rows) in dataset.days().iter().zip(dataset.entries()) {
        out.write_all(&date.num_days_from_ce().to_le_bytes())?;
        for entry in rows {
            put_str(&mut out, &entry.key.title)?;
            put_str(&mut out, &entry.key.artist)?;
            out.write_all(&entry.streams.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N], CacheError> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| match e.kind() {
                io::ErrorKind::UnexpectedEof => CacheError::Corrupt("truncated".into()),
                _ => CacheError::Io(e),
            })?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32, CacheError> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn string(&mut self) -> Result<String, CacheError> {
        let len = self.u32()? as usize;
        let mut buf = Vec::new();
        (&mut self.inner).take(len as u64).read_to_end(&mut buf)?;
        if buf.len() != len {
            return Err(CacheError::Corrupt("truncated string".into()));
        }
        String::from_utf8(buf).map_err(|e| CacheError::Corrupt(e.to_string()))
    }
}

pub fn read_cache<R: Read>(input: R) -> Result<ChartDataset, CacheError> {
    let mut r = Reader { inner: input };
    if &r.bytes::<4>()? != MAGIC {
        return Err(CacheError::BadMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(CacheError::Version { found: version });
    }
    let chart_size = r.u32()?;
    let day_count = r.u32()? as usize;
    let mut days = Vec::with_capacity(day_count);
    let mut entries = Vec::with_capacity(day_count);
    for _ in 0..day_count {
        let ce = i32::from_le_bytes(r.bytes()?);
        let date = NaiveDate::from_num_days_from_ce_opt(ce)
            .ok_or_else(|| CacheError::Corrupt(format!("bad day number {ce}")))?;
        let mut rows = Vec::with_capacity(chart_size as usize);
        for position in 1..=chart_size {
            let title = r.string()?;
            let artist = r.string()?;
            let streams = u64::from_le_bytes(r.bytes()?);
            rows.push(ChartEntry {
                date,
                position,
                key: SongKey { title, artist },
                streams,
            });
        }
        days.push(date);
        entries.push(rows);
    }
    Ok(ChartDataset::from_days(chart_size, days, entries)?)
}
