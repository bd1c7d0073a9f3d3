use std::collections::BTreeSet;

use nlos_core::clustering::{centroid, dbscan, NOISE};
use nlos_core::Point2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Brute-force DBSCAN: core components by union-find, then border points.
struct Oracle {
    /// Components over core points plus their unambiguous border points.
    partition: BTreeSet<BTreeSet<usize>>,
    noise: BTreeSet<usize>,
    /// Border points adjacent to cores of more than one component, with the
    /// set of candidate components (as core member sets).
    ambiguous: Vec<(usize, Vec<BTreeSet<usize>>)>,
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    parent[i] = r;
    r
}

fn oracle(points: &[Point2], eps: f64, min_pts: usize) -> Oracle {
    let n = points.len();
    let close = |i: usize, j: usize| {
        let (dx, dy) = (points[i].x - points[j].x, points[i].y - points[j].y);
        dx * dx + dy * dy <= eps * eps
    };
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| close(i, j)).count() >= min_pts)
        .collect();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if core[i] && core[j] && close(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let mut comps: std::collections::BTreeMap<usize, BTreeSet<usize>> = Default::default();
    for i in (0..n).filter(|&i| core[i]) {
        comps.entry(roots[i]).or_default().insert(i);
    }
    let core_sets = comps.clone();
    let mut noise = BTreeSet::new();
    let mut ambiguous = Vec::new();
    for i in (0..n).filter(|&i| !core[i]) {
        let owners: BTreeSet<usize> = (0..n)
            .filter(|&j| core[j] && close(i, j))
            .map(|j| roots[j])
            .collect();
        match owners.len() {
            0 => {
                noise.insert(i);
            }
            1 => {
                comps
                    .get_mut(owners.iter().next().unwrap())
                    .unwrap()
                    .insert(i);
            }
            _ => ambiguous.push((i, owners.iter().map(|r| core_sets[r].clone()).collect())),
        }
    }
    Oracle {
        partition: comps.into_values().collect(),
        noise,
        ambiguous,
    }
}

/// Checks a result against the oracle; ambiguous border points may join any
/// adjacent component.
fn agrees(points: &[Point2], eps: f64, min_pts: usize) -> Result<(), String> {
    let res = dbscan(points, eps, min_pts).map_err(|e| e.to_string())?;
    let o = oracle(points, eps, min_pts);
    let noise: BTreeSet<usize> = res.noise().into_iter().collect();
    if noise != o.noise {
        return Err(format!("noise {noise:?} != {:?}", o.noise));
    }
    let ambiguous: BTreeSet<usize> = o.ambiguous.iter().map(|(i, _)| *i).collect();
    let got: BTreeSet<BTreeSet<usize>> = res
        .clusters
        .iter()
        .map(|c| {
            c.iter()
                .copied()
                .filter(|i| !ambiguous.contains(i))
                .collect()
        })
        .collect();
    if got != o.partition {
        return Err(format!("partition {got:?} != {:?}", o.partition));
    }
    for (i, candidates) in &o.ambiguous {
        let label = res.labels[*i];
        if label == NOISE {
            return Err(format!("ambiguous border point {i} left as noise"));
        }
        let members: BTreeSet<usize> = res.clusters[label as usize].iter().copied().collect();
        if !candidates.iter().any(|c| c.is_subset(&members)) {
            return Err(format!("border point {i} joined a non-adjacent cluster"));
        }
    }
    for (id, members) in res.clusters.iter().enumerate() {
        if members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("cluster {id} members not ascending"));
        }
        if members.iter().any(|&i| res.labels[i] != id as i32) {
            return Err(format!("labels disagree with cluster {id}"));
        }
    }
    Ok(())
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<Point2>, f64, usize) {
    let n = rng.random_range(0..=200);
    let blobs = rng.random_range(1..=5);
    let centers: Vec<Point2> = (0..blobs)
        .map(|_| Point2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)))
        .collect();
    let points = (0..n)
        .map(|_| {
            if rng.random_bool(0.8) {
                let c = centers[rng.random_range(0..blobs)];
                c + Point2::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5))
            } else {
                Point2::new(rng.random_range(-12.0..12.0), rng.random_range(-12.0..12.0))
            }
        })
        .collect();
    (points, rng.random_range(0.1..1.5), rng.random_range(1..=8))
}

#[test]
fn matches_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..300 {
        let (points, eps, min_pts) = random_instance(&mut rng);
        agrees(&points, eps, min_pts).unwrap_or_else(|e| panic!("instance {k}: {e}"));
    }
}

#[test]
fn two_separated_blobs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let eps = 0.4;
    let mut points = Vec::new();
    for c in [Point2::new(0.0, 0.0), Point2::new(10.0 * eps, 0.0)] {
        for _ in 0..20 {
            points.push(
                c + Point2::new(rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15)),
            );
        }
    }
    let res = dbscan(&points, eps, 4).unwrap();
    assert_eq!(res.num_clusters(), 2);
    assert_eq!(res.clusters[0], (0..20).collect::<Vec<_>>());
    assert_eq!(res.clusters[1], (20..40).collect::<Vec<_>>());
    agrees(&points, eps, 4).unwrap();
}

#[test]
fn trivial_inputs() {
    assert_eq!(dbscan(&[], 0.5, 3).unwrap().num_clusters(), 0);
    let one = dbscan(&[Point2::new(1.0, 1.0)], 0.5, 1).unwrap();
    assert_eq!(one.clusters, vec![vec![0]]);
    assert!(dbscan(&[Point2::new(0.0, 0.0)], 0.0, 1).is_err());
    assert!(dbscan(&[Point2::new(0.0, 0.0)], -1.0, 1).is_err());
}

#[test]
fn inclusive_eps() {
    let pts = [Point2::new(0.0, 0.0), Point2::new(0.5, 0.0)];
    assert_eq!(dbscan(&pts, 0.5, 2).unwrap().num_clusters(), 1);
    assert_eq!(dbscan(&pts, 0.4999, 2).unwrap().num_clusters(), 0);
}

#[test]
fn centroid_matches_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts: Vec<Point2> = (0..100)
        .map(|_| Point2::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)))
        .collect();
    let (mut sx, mut sy) = (0.0, 0.0);
    for p in &pts {
        sx += p.x;
        sy += p.y;
    }
    let c = centroid(&pts).unwrap();
    assert!((c.x - sx / 100.0).abs() <= 1e-12);
    assert!((c.y - sy / 100.0).abs() <= 1e-12);
    assert_eq!(
        centroid(&[Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)]).unwrap(),
        Point2::new(1.0, 0.0)
    );
    assert_eq!(
        centroid(&[Point2::new(1.0, 1.0)]).unwrap(),
        Point2::new(1.0, 1.0)
    );
    assert!(centroid(&[]).is_err());
}

fn arb_points() -> impl Strategy<Value = Vec<Point2>> {
    prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 0..80)
        .prop_map(|v| v.into_iter().map(|(x, y)| Point2::new(x, y)).collect())
}

proptest! {
    #[test]
    fn oracle_agreement(points in arb_points(), eps in 0.2..1.5f64, min_pts in 1usize..6) {
        prop_assert!(agrees(&points, eps, min_pts).is_ok());
    }

    #[test]
    fn permutation_keeps_partition(points in arb_points(), eps in 0.2..1.5f64, min_pts in 1usize..6, seed in any::<u64>()) {
        let o = oracle(&points, eps, min_pts);
        prop_assume!(o.ambiguous.is_empty());
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let shuffled: Vec<Point2> = order.iter().map(|&i| points[i]).collect();
        let as_sets = |pts: &[Point2], map: &dyn Fn(usize) -> usize| -> BTreeSet<BTreeSet<usize>> {
            dbscan(pts, eps, min_pts).unwrap().clusters.iter()
                .map(|c| c.iter().map(|&i| map(i)).collect())
                .collect()
        };
        let a = as_sets(&points, &|i| i);
        let b = as_sets(&shuffled, &|i| order[i]);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn noise_points_are_not_core(points in arb_points(), eps in 0.2..1.5f64, min_pts in 1usize..6) {
        let res = dbscan(&points, eps, min_pts).unwrap();
        for i in res.noise() {
            let nb = points.iter().filter(|q| q.distance(points[i]) <= eps).count();
            prop_assert!(nb < min_pts);
        }
    }
}
