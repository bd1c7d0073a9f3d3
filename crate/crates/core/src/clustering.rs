//! DBSCAN density clustering on the ground plane.
//!
//! Neighborhoods are inclusive (`distance <= eps`) and count the query point
//! itself. Points are visited in index order, so a border point reachable
//! from two clusters joins the one created first.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Label of a point that belongs to no cluster.
pub const NOISE: i32 = -1;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClusterResult {
    /// Per input point: cluster id, or [`NOISE`].
    pub labels: Vec<i32>,
    /// Point indices of each cluster, ascending; ids are dense from 0.
    pub clusters: Vec<Vec<usize>>,
}

impl ClusterResult {
    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn noise(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == NOISE)
            .map(|(i, _)| i)
            .collect()
    }
}

/// The neighbor predicate shared by every DBSCAN path.
#[inline]
pub fn within_eps(a: Point2, b: Point2, eps: f64) -> bool {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy <= eps * eps
}

/// Uniform hash grid with cell size `eps`; a 3x3 cell query covers every
/// point within `eps`.
struct Grid<'a> {
    points: &'a [Point2],
    eps: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> Grid<'a> {
    fn new(points: &'a [Point2], eps: f64) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(*p, eps)).or_default().push(i);
        }
        Grid { points, eps, cells }
    }

    fn key(p: Point2, eps: f64) -> (i64, i64) {
        ((p.x / eps).floor() as i64, (p.y / eps).floor() as i64)
    }

    fn neighbors(&self, i: usize, out: &mut Vec<usize>) {
        out.clear();
        let p = self.points[i];
        let (cx, cy) = Self::key(p, self.eps);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(cell) = self.cells.get(&(cx + dx, cy + dy)) {
                    out.extend(
                        cell.iter()
                            .copied()
                            .filter(|&j| within_eps(p, self.points[j], self.eps)),
                    );
                }
            }
        }
    }
}

pub fn dbscan(points: &[Point2], eps: f64, min_pts: usize) -> Result<ClusterResult> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Config(format!(
            "dbscan eps must be positive, got {eps}"
        )));
    }
    if min_pts == 0 {
        return Err(Error::Config("dbscan min_pts must be at least 1".into()));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::Validation(
            "dbscan input contains non-finite points".into(),
        ));
    }

    const UNVISITED: i32 = -2;
    let grid = Grid::new(points, eps);
    let mut labels = vec![UNVISITED; points.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut nbrs = Vec::new();
    let mut queue = VecDeque::new();

    for i in 0..points.len() {
        if labels[i] != UNVISITED {
            continue;
        }
        grid.neighbors(i, &mut nbrs);
        if nbrs.len() < min_pts {
            labels[i] = NOISE;
            continue;
        }
        let id = clusters.len() as i32;
        let mut members = vec![i];
        labels[i] = id;
        queue.clear();
        for &j in &nbrs {
            if j != i && (labels[j] == UNVISITED || labels[j] == NOISE) {
                // Noise reached here is a border point of this cluster.
                let expand = labels[j] == UNVISITED;
                labels[j] = id;
                members.push(j);
                if expand {
                    queue.push_back(j);
                }
            }
        }
        while let Some(j) = queue.pop_front() {
            grid.neighbors(j, &mut nbrs);
            if nbrs.len() < min_pts {
                continue;
            }
            for &k in &nbrs {
                if labels[k] == UNVISITED || labels[k] == NOISE {
                    let expand = labels[k] == UNVISITED;
                    labels[k] = id;
                    members.push(k);
                    if expand {
                        queue.push_back(k);
                    }
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }

    Ok(ClusterResult { labels, clusters })
}

/// Arithmetic mean of a non-empty cluster.
pub fn centroid(points: &[Point2]) -> Result<Point2> {
    if points.is_empty() {
        return Err(Error::Logic("centroid of an empty cluster".into()));
    }
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Ok(Point2::new(sx / n, sy / n))
}
