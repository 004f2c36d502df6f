mod common;

use chartpulse::clustering::{kmeans, kmeans_best_of, standardize};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn random_instance(r: &mut rand_chacha::ChaCha8Rng) -> Vec<[f64; 2]> {
    let n = r.random_range(3..=8);
    (0..n)
        .map(|_| [r.random_range(-5.0..5.0), r.random_range(-5.0..5.0)])
        .collect()
}

#[test]
fn best_of_ten_matches_brute_force() {
    let mut r = rng(99);
    let mut optimal = 0;
    for _ in 0..100 {
        let points = random_instance(&mut r);
        let best = brute_force_two_means(&points);
        let run = kmeans_best_of(&points, 2, r.random(), 10, 300).unwrap();
        let tol = 1e-9 * best.max(1.0);
        assert!(
            run.inertia >= best - tol,
            "{} below optimum {best}",
            run.inertia
        );
        if run.inertia <= best + tol {
            optimal += 1;
        }
    }
    assert!(optimal >= 95, "{optimal}/100");
}

#[test]
fn lloyd_history_never_increases() {
    let mut r = rng(3);
    for _ in 0..200 {
        let n = r.random_range(4..60);
        let points: Vec<[f64; 2]> = (0..n)
            .map(|_| [r.random::<f64>(), r.random::<f64>()])
            .collect();
        let k = r.random_range(1..=4);
        let run = kmeans(&points, k, r.random(), 300).unwrap();
        assert!(
            run.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)),
            "{:?}",
            run.history
        );
        assert!(run.inertia <= run.history[0] * (1.0 + 1e-12));
    }
}

#[test]
fn same_seed_same_partition() {
    let mut r = rng(4);
    let points: Vec<[f64; 2]> = (0..50)
        .map(|_| [r.random::<f64>(), r.random::<f64>()])
        .collect();
    assert_eq!(
        kmeans_best_of(&points, 3, 17, 5, 300).unwrap(),
        kmeans_best_of(&points, 3, 17, 5, 300).unwrap()
    );
}

proptest! {
    #[test]
    fn converged_run_is_a_fixed_point(
        points in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 3..40),
        k in 1usize..4,
        seed in any::<u64>(),
    ) {
        let pts: Vec<[f64; 2]> = points.iter().map(|&(x, y)| [x, y]).collect();
        let Ok(run) = kmeans(&pts, k, seed, 1000) else { return Ok(()) };
        let d2 = |p: &[f64; 2], c: &[f64; 2]| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
        for (p, &a) in pts.iter().zip(&run.assignments) {
            let own = d2(p, &run.centroids[a]);
            prop_assert!(run.centroids.iter().all(|c| own <= d2(p, c) + 1e-9));
        }
        for (c, centroid) in run.centroids.iter().enumerate() {
            let members: Vec<&[f64; 2]> = pts.iter().zip(&run.assignments).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
            prop_assert!(!members.is_empty());
            for d in 0..2 {
                let m = members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64;
                prop_assert!((m - centroid[d]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn standardization_round_trips(
        points in prop::collection::vec((-1e3..1e3f64, -1.0..1.0f64), 2..50),
    ) {
        let pts: Vec<[f64; 2]> = points.iter().map(|&(x, y)| [x, y]).collect();
        let (z, scaling) = standardize(&pts).unwrap();
        for (p, q) in pts.iter().zip(&z) {
            let back = scaling.invert(q);
            for d in 0..2 {
                prop_assert!((back[d] - p[d]).abs() <= 1e-12 * p[d].abs().max(1.0));
            }
        }
        for d in 0..2 {
            if !scaling.degenerate[d] {
                let m = z.iter().map(|p| p[d]).sum::<f64>() / z.len() as f64;
                let v = z.iter().map(|p| (p[d] - m).powi(2)).sum::<f64>() / z.len() as f64;
                prop_assert!(m.abs() < 1e-9 && (v - 1.0).abs() < 1e-9);
            }
        }
    }
}
