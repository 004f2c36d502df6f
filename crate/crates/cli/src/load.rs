//! Loading datasets and resolving song selectors.

use std::fs;
use std::path::Path;

use chartpulse::cache::{is_cache, read_cache};
use chartpulse::ingest::{parse_chart_csv, ChartDataset, IngestWarning, SongKey};

use crate::args::DatasetArgs;
use crate::error::CliError;

pub struct Loaded {
    pub dataset: ChartDataset,
    pub warnings: Vec<IngestWarning>,
    /// Input file stem, used to name outputs.
    pub id: String,
}

pub fn dataset_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "dataset".to_string())
}

/// Reads a chart CSV or cache. A cache keeps its own chart size.
pub fn load(args: &DatasetArgs) -> Result<Loaded, CliError> {
    let bytes = fs::read(&args.input).map_err(|e| CliError::data(args.input.display(), e))?;
    let id = dataset_id(&args.input);
    if is_cache(&bytes) {
        let dataset =
            read_cache(bytes.as_slice()).map_err(|e| CliError::data(args.input.display(), e))?;
        return Ok(Loaded {
            dataset,
            warnings: Vec::new(),
            id,
        });
    }
    let parsed = parse_chart_csv(bytes.as_slice(), args.chart_size)
        .map_err(|e| CliError::data(args.input.display(), e))?;
    Ok(Loaded {
        dataset: parsed.dataset,
        warnings: parsed.warnings,
        id,
    })
}

/// Closest song keys to `wanted` by normalized edit distance.
pub fn suggestions(dataset: &ChartDataset, wanted: &str, limit: usize) -> Vec<SongKey> {
    let wanted = wanted.to_lowercase();
    let mut scored: Vec<(f64, &SongKey)> = dataset
        .songs()
        .map(|k| {
            (
                strsim::normalized_levenshtein(&wanted, &k.to_string().to_lowercase()),
                k,
            )
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored
        .into_iter()
        .take(limit)
        .map(|(_, k)| k.clone())
        .collect()
}

/// Resolves `--song`, which may be omitted when the dataset has one song.
pub fn resolve_song(dataset: &ChartDataset, selector: Option<&str>) -> Result<SongKey, CliError> {
    let Some(selector) = selector else {
        let mut songs = dataset.songs();
        return match (songs.next(), songs.next()) {
            (Some(only), None) => Ok(only.clone()),
            _ => Err(CliError::Usage(format!(
                "--song is required: the input holds {} songs",
                dataset.song_count()
            ))),
        };
    };
    let key = SongKey::parse_selector(selector).ok_or_else(|| {
        CliError::Usage(format!(
            "song selector `{selector}` must look like \"title::artist\""
        ))
    })?;
    if dataset.song_index().contains_key(&key) {
        return Ok(key);
    }
    let near: Vec<String> = suggestions(dataset, selector, 3)
        .iter()
        .map(|k| format!("  {k}"))
        .collect();
    Err(CliError::Data(format!(
        "song not found: {key}\nclosest matches:\n{}",
        near.join("\n")
    )))
}
