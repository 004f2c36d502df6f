//! k-means on per-song (decay rate, R²) features.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{fit_log_linear, RegressionResult, RegressionWindow};
use crate::ingest::{extract_song_series, ChartDataset, SongKey};

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("k must be at least 1")]
    ZeroClusters,
    #[error("k = {k} exceeds the {distinct} distinct points available")]
    TooFewPoints { k: usize, distinct: usize },
    #[error("need at least {needed} feature vectors, have {available}")]
    TooFewFeatures { needed: usize, available: usize },
    #[error("min_days must be at least 2")]
    MinDaysTooSmall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub key: SongKey,
    /// Positive for decay, negative for growth.
    pub decay_rate: f64,
    pub r_squared: f64,
}

impl FeatureVector {
    pub fn point(&self) -> [f64; 2] {
        [self.decay_rate, self.r_squared]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub features: Vec<FeatureVector>,
    /// Songs left out, with their number of observed days.
    pub excluded: Vec<(SongKey, usize)>,
    pub regressions: BTreeMap<SongKey, RegressionResult>,
}

/// Log-linear regression over each song's full series; songs with fewer
/// than `min_days` observed days (or no usable regression) are excluded.
pub fn build_features(dataset: &ChartDataset, min_days: usize) -> Result<FeatureSet, ClusterError> {
    if min_days < 2 {
        return Err(ClusterError::MinDaysTooSmall);
    }
    let mut features = Vec::new();
    let mut excluded = Vec::new();
    let mut regressions = BTreeMap::new();
    for key in dataset.songs() {
        let series = extract_song_series(dataset, key).expect("key comes from the index");
        let present = series.present_days();
        if present < min_days {
            excluded.push((key.clone(), present));
            continue;
        }
        match fit_log_linear(&series.counts, RegressionWindow::Full) {
            Ok(fit) => {
                features.push(FeatureVector {
                    key: key.clone(),
                    decay_rate: fit.decay_rate,
                    r_squared: fit.r_squared,
                });
                regressions.insert(key.clone(), fit);
            }
            Err(_) => excluded.push((key.clone(), present)),
        }
    }
    Ok(FeatureSet {
        features,
        excluded,
        regressions,
    })
}

/// Per-dimension z-scoring. A zero-variance dimension maps to zeros and is
/// flagged; its recorded standard deviation is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization<const D: usize> {
    #[serde(with = "serde_arrays")]
    pub mean: [f64; D],
    #[serde(with = "serde_arrays")]
    pub std: [f64; D],
    #[serde(with = "serde_arrays")]
    pub degenerate: [bool; D],
}

mod serde_arrays {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, T: Serialize, const D: usize>(
        v: &[T; D],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, De, T, const D: usize>(d: De) -> Result<[T; D], De::Error>
    where
        De: Deserializer<'de>,
        T: Deserialize<'de>,
    {
        let v = Vec::<T>::deserialize(d)?;
        let len = v.len();
        v.try_into()
            .map_err(|_| serde::de::Error::invalid_length(len, &"fixed-size array"))
    }
}

impl<const D: usize> Standardization<D> {
    pub fn apply(&self, p: &[f64; D]) -> [f64; D] {
        std::array::from_fn(|d| {
            if self.degenerate[d] {
                0.0
            } else {
                (p[d] - self.mean[d]) / self.std[d]
            }
        })
    }

    pub fn invert(&self, z: &[f64; D]) -> [f64; D] {
        std::array::from_fn(|d| self.mean[d] + z[d] * self.std[d])
    }
}

pub fn standardize<const D: usize>(
    points: &[[f64; D]],
) -> Result<(Vec<[f64; D]>, Standardization<D>), ClusterError> {
    if points.len() < 2 {
        return Err(ClusterError::TooFewFeatures {
            needed: 2,
            available: points.len(),
        });
    }
    let n = points.len() as f64;
    let mut mean = [0.0; D];
    let mut std = [0.0; D];
    let mut degenerate = [false; D];
    for d in 0..D {
        mean[d] = points.iter().map(|p| p[d]).sum::<f64>() / n;
        let var = points.iter().map(|p| (p[d] - mean[d]).powi(2)).sum::<f64>() / n;
        std[d] = var.sqrt();
        if !(std[d] > 0.0) {
            degenerate[d] = true;
            std[d] = 0.0;
        }
    }
    let scaling = Standardization {
        mean,
        std,
        degenerate,
    };
    let out = points.iter().map(|p| scaling.apply(p)).collect();
    Ok((out, scaling))
}

fn sq_dist<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn distinct_count<const D: usize>(points: &[[f64; D]]) -> usize {
    let mut sorted: Vec<[f64; D]> = points.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    sorted.dedup();
    sorted.len()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansRun<const D: usize> {
    pub assignments: Vec<usize>,
    pub centroids: Vec<[f64; D]>,
    pub inertia: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Inertia after every assignment step.
    pub history: Vec<f64>,
}

fn nearest<const D: usize>(points: &[[f64; D]], centroids: &[[f64; D]]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_d = sq_dist(p, &centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let d = sq_dist(p, centroid);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

fn inertia_of<const D: usize>(
    points: &[[f64; D]],
    assign: &[usize],
    centroids: &[[f64; D]],
) -> f64 {
    points
        .iter()
        .zip(assign)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum()
}

/// Cluster means; each empty cluster takes over the point farthest from its
/// current centroid (among clusters with more than one member).
fn update_centroids<const D: usize>(
    points: &[[f64; D]],
    assign: &mut [usize],
    centroids: &mut [[f64; D]],
) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &c in assign.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            break;
        };
        let mut far: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if sizes[assign[i]] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[assign[i]]);
            if far.is_none_or(|(_, fd)| d > fd) {
                far = Some((i, d));
            }
        }
        let (i, _) = far.expect("k <= number of points leaves a cluster to split");
        assign[i] = empty;
        centroids[empty] = points[i];
    }
    let mut sums = vec![[0.0; D]; k];
    let mut sizes = vec![0usize; k];
    for (p, &c) in points.iter().zip(assign.iter()) {
        sizes[c] += 1;
        for d in 0..D {
            sums[c][d] += p[d];
        }
    }
    for c in 0..k {
        centroids[c] = std::array::from_fn(|d| sums[c][d] / sizes[c] as f64);
    }
}

fn plus_plus_seeds<const D: usize>(
    points: &[[f64; D]],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<[f64; D]> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)]];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut cumulative = 0.0;
        let mut chosen = None;
        for (i, &d) in d2.iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            cumulative += d;
            chosen = Some(i);
            if cumulative > target {
                break;
            }
        }
        let next = points[chosen.expect("distinct points remain while fewer than k seeds")];
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &next));
        }
        centroids.push(next);
    }
    centroids
}

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or `max_iters` updates have run.
pub fn kmeans<const D: usize>(
    points: &[[f64; D]],
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<KMeansRun<D>, ClusterError> {
    if k == 0 {
        return Err(ClusterError::ZeroClusters);
    }
    let distinct = distinct_count(points);
    if k > distinct {
        return Err(ClusterError::TooFewPoints { k, distinct });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_seeds(points, k, &mut rng);
    let mut assign = nearest(points, &centroids);
    let mut history = vec![inertia_of(points, &assign, &centroids)];
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        update_centroids(points, &mut assign, &mut centroids);
        let next = nearest(points, &centroids);
        history.push(inertia_of(points, &next, &centroids));
        if next == assign {
            break;
        }
        assign = next;
    }
    update_centroids(points, &mut assign, &mut centroids);
    let inertia = inertia_of(points, &assign, &centroids);
    Ok(KMeansRun {
        assignments: assign,
        centroids,
        inertia,
        iterations,
        seed,
        history,
    })
}

/// Lowest-inertia run over `restarts` seeds derived from `seed`; the first
/// such run wins ties.
pub fn kmeans_best_of<const D: usize>(
    points: &[[f64; D]],
    k: usize,
    seed: u64,
    restarts: usize,
    max_iters: usize,
) -> Result<KMeansRun<D>, ClusterError> {
    let mut best: Option<KMeansRun<D>> = None;
    for r in 0..restarts.max(1) as u64 {
        let run = kmeans(points, k, seed.wrapping_add(r), max_iters)?;
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOptions {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
    pub standardize: bool,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        Self {
            k: 8,
            seed: 0,
            restarts: 10,
            max_iters: 300,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub k: usize,
    pub assignments: BTreeMap<SongKey, usize>,
    /// In the clustered (standardized, unless disabled) space.
    pub centroids: Vec<[f64; 2]>,
    pub inertia: f64,
    pub iterations: usize,
    pub seed: u64,
    pub scaling: Option<Standardization<2>>,
}

impl ClusteringResult {
    /// Centroid in (decay rate, R²) units.
    pub fn centroid_original(&self, cluster: usize) -> [f64; 2] {
        match &self.scaling {
            Some(s) => s.invert(&self.centroids[cluster]),
            None => self.centroids[cluster],
        }
    }
}

fn clustering_space(
    features: &[FeatureVector],
    standardize_features: bool,
) -> Result<(Vec<[f64; 2]>, Option<Standardization<2>>), ClusterError> {
    let raw: Vec<[f64; 2]> = features.iter().map(FeatureVector::point).collect();
    if standardize_features {
        let (points, scaling) = standardize(&raw)?;
        Ok((points, Some(scaling)))
    } else {
        Ok((raw, None))
    }
}

pub fn cluster_songs(
    features: &[FeatureVector],
    options: &ClusterOptions,
) -> Result<ClusteringResult, ClusterError> {
    let (points, scaling) = clustering_space(features, options.standardize)?;
    let run = kmeans_best_of(
        &points,
        options.k,
        options.seed,
        options.restarts,
        options.max_iters,
    )?;
    let assignments = features
        .iter()
        .zip(&run.assignments)
        .map(|(f, &c)| (f.key.clone(), c))
        .collect();
    Ok(ClusteringResult {
        k: options.k,
        assignments,
        centroids: run.centroids,
        inertia: run.inertia,
        iterations: run.iterations,
        seed: run.seed,
        scaling,
    })
}

/// Best inertia for each `k` in `ks` that the data can support.
pub fn elbow(
    features: &[FeatureVector],
    ks: impl IntoIterator<Item = usize>,
    options: &ClusterOptions,
) -> Result<Vec<(usize, f64)>, ClusterError> {
    let (points, _) = clustering_space(features, options.standardize)?;
    let distinct = distinct_count(&points);
    let mut out = Vec::new();
    for k in ks {
        if k == 0 || k > distinct {
            continue;
        }
        let run = kmeans_best_of(
            &points,
            k,
            options.seed,
            options.restarts,
            options.max_iters,
        )?;
        out.push((k, run.inertia));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster: usize,
    pub members: Vec<SongKey>,
    pub centroid: [f64; 2],
    pub decay_rate_range: (f64, f64),
    pub r_squared_range: (f64, f64),
    /// Members with negative decay rate (growing songs).
    pub growing: usize,
}

pub fn cluster_report(
    result: &ClusteringResult,
    features: &[FeatureVector],
) -> Vec<ClusterSummary> {
    let mut out: Vec<ClusterSummary> = (0..result.k)
        .map(|c| ClusterSummary {
            cluster: c,
            members: Vec::new(),
            centroid: result.centroid_original(c),
            decay_rate_range: (f64::INFINITY, f64::NEG_INFINITY),
            r_squared_range: (f64::INFINITY, f64::NEG_INFINITY),
            growing: 0,
        })
        .collect();
    for f in features {
        let Some(&c) = result.assignments.get(&f.key) else {
            continue;
        };
        let s = &mut out[c];
        s.members.push(f.key.clone());
        s.decay_rate_range = (
            s.decay_rate_range.0.min(f.decay_rate),
            s.decay_rate_range.1.max(f.decay_rate),
        );
        s.r_squared_range = (
            s.r_squared_range.0.min(f.r_squared),
            s.r_squared_range.1.max(f.r_squared),
        );
        if f.decay_rate < 0.0 {
            s.growing += 1;
        }
    }
    out
}
