use chartpulse::clustering::{
    build_features, cluster_report, cluster_songs, elbow, ClusterOptions, ClusterSummary,
    Standardization,
};
use serde::Serialize;

use super::Finished;
use crate::args::ClusterArgs;
use crate::error::CliError;
use crate::load::load;
use crate::output::{json_bytes, Outputs, Table};

#[derive(Debug, Serialize)]
struct CentroidReport {
    k: usize,
    seed: u64,
    standardized: bool,
    inertia: f64,
    iterations: usize,
    songs: usize,
    excluded: usize,
    scaling: Option<Standardization<2>>,
    /// (decay rate, R²) per cluster, in original units.
    centroids: Vec<[f64; 2]>,
    clusters: Vec<ClusterSummary>,
}

pub fn run(args: &ClusterArgs) -> Result<Finished, CliError> {
    let loaded = load(&args.dataset)?;
    let features = build_features(&loaded.dataset, args.min_days)?;
    let options = ClusterOptions {
        k: args.k,
        seed: args.seed,
        restarts: args.restarts,
        max_iters: args.max_iters,
        standardize: !args.no_standardize,
    };
    if features.features.len() < args.k {
        return Err(CliError::Data(format!(
            "k = {} exceeds the {} songs with at least {} observed days",
            args.k,
            features.features.len(),
            args.min_days
        )));
    }
    let result = cluster_songs(&features.features, &options)?;
    let summaries = cluster_report(&result, &features.features);
    println!(
        "{} songs clustered ({} excluded), k = {}, inertia = {}",
        features.features.len(),
        features.excluded.len(),
        result.k,
        result.inertia
    );
    for s in &summaries {
        println!(
            "  cluster {}: {} songs, centroid decay rate {}, r_squared {}, {} growing",
            s.cluster,
            s.members.len(),
            s.centroid[0],
            s.centroid[1],
            s.growing
        );
    }

    let mut assignments = Table::new(
        &[],
        &["title", "artist", "decay_rate", "r_squared", "cluster"],
    );
    for f in &features.features {
        assignments.row(&[
            f.key.title.clone(),
            f.key.artist.clone(),
            f.decay_rate.to_string(),
            f.r_squared.to_string(),
            result.assignments[&f.key].to_string(),
        ]);
    }

    let report = CentroidReport {
        k: result.k,
        seed: result.seed,
        standardized: options.standardize,
        inertia: result.inertia,
        iterations: result.iterations,
        songs: features.features.len(),
        excluded: features.excluded.len(),
        scaling: result.scaling.clone(),
        centroids: (0..result.k).map(|c| result.centroid_original(c)).collect(),
        clusters: summaries,
    };

    let mut curve = Table::new(&[], &["k", "inertia"]);
    for (k, inertia) in elbow(&features.features, 2..=args.elbow_max, &options)? {
        curve.row(&[k.to_string(), inertia.to_string()]);
    }

    let id = &loaded.id;
    let mut outputs = Outputs::default();
    outputs.write(
        args.out_dir.join(format!("cluster-assignments_{id}.csv")),
        &assignments.into_bytes(),
    )?;
    outputs.write(
        args.out_dir.join(format!("cluster-centroids_{id}.json")),
        &json_bytes(&report),
    )?;
    outputs.write(
        args.out_dir.join(format!("cluster-elbow_{id}.csv")),
        &curve.into_bytes(),
    )?;
    Ok(Finished {
        outputs,
        manifest: args.out_dir.join(format!("cluster_{id}.manifest.json")),
    })
}
