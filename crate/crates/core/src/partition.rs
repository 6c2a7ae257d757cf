//! Separated nets and Voronoi partitions of a convex polygon.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{set_distance, ConvexPolygon, Point, SubsetRegion};

/// Default side length of the candidate grid used by the greedy net.
pub const DEFAULT_GRID_RESOLUTION: usize = 256;

/// An `r`-separated set of centers in `ambient`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub centers: Vec<Point>,
    /// Separation radius: pairwise center distances are at least `r`.
    pub r: f64,
    /// Exact covering radius of the centers over the ambient polygon.
    pub covering_radius: f64,
    pub ambient: ConvexPolygon,
    pub grid_resolution: usize,
    /// Centers added after the grid pass by the exact completion step.
    pub completion_added: usize,
}

impl Net {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Maximal (no further point of the domain is `r` away from every center).
    pub fn is_maximal(&self) -> bool {
        self.covering_radius < self.r
    }

    /// Smallest pairwise center distance (infinite for a single center).
    pub fn min_separation(&self) -> f64 {
        min_pairwise(&self.centers)
    }
}

fn min_pairwise(points: &[Point]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.min(points[i].dist(points[j]));
        }
    }
    best
}

/// Voronoi cells of a set of centers, clipped to a convex polygon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoronoiPartition {
    pub centers: Vec<Point>,
    pub cells: Vec<ConvexPolygon>,
}

impl VoronoiPartition {
    /// Index of the cell owning `p`: nearest center, lowest index on ties.
    pub fn locate(&self, p: Point) -> usize {
        nearest(&self.centers, p).0
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(ConvexPolygon::area).sum()
    }

    /// Largest distance from a center to a point of its own cell.
    pub fn covering_radius(&self) -> f64 {
        self.centers
            .iter()
            .zip(&self.cells)
            .flat_map(|(c, cell)| cell.vertices().iter().map(move |v| c.dist(*v)))
            .fold(0.0, f64::max)
    }
}

/// JSON record `{centers, r, covering_radius, cells}` for a net and its partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionRecord {
    pub centers: Vec<Point>,
    pub r: f64,
    pub covering_radius: f64,
    pub cells: Vec<ConvexPolygon>,
}

impl PartitionRecord {
    pub fn new(net: &Net, partition: &VoronoiPartition) -> Self {
        PartitionRecord {
            centers: net.centers.clone(),
            r: net.r,
            covering_radius: net.covering_radius,
            cells: partition.cells.clone(),
        }
    }
}

fn nearest(centers: &[Point], p: Point) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = c.dist2(p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Grid points of `poly`, ordered by `y` then `x`.
pub fn candidate_grid(poly: &ConvexPolygon, resolution: usize) -> Vec<Point> {
    let res = resolution.max(2);
    let (lo, hi) = poly.bounding_box();
    let step = |a: f64, b: f64, i: usize| {
        if i == res - 1 {
            b
        } else {
            a + (b - a) * i as f64 / (res - 1) as f64
        }
    };
    let mut pts = Vec::with_capacity(res * res);
    for i in 0..res {
        let y = step(lo.y, hi.y, i);
        for j in 0..res {
            let p = Point::new(step(lo.x, hi.x, j), y);
            if poly.contains(p) {
                pts.push(p);
            }
        }
    }
    pts
}

/// Lowest `(y, x)` among points attaining the maximum of `score`.
fn argmax_lowest(points: &[Point], score: impl Fn(usize) -> f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..points.len() {
        let s = score(i);
        best = match best {
            None => Some((i, s)),
            Some((bi, bs)) => {
                let lower = (points[i].y, points[i].x) < (points[bi].y, points[bi].x);
                if s > bs || (s == bs && lower) {
                    Some((i, s))
                } else {
                    Some((bi, bs))
                }
            }
        };
    }
    best
}

/// Farthest-point greedy net with separation `r`, seeded at `start`.
pub fn greedy_maximal_net(poly: &ConvexPolygon, r: f64, start: Point) -> Result<Net> {
    greedy_maximal_net_with(poly, r, start, DEFAULT_GRID_RESOLUTION)
}

/// Grid pass: repeatedly add the candidate farthest from the chosen centers
/// while that distance is at least `r`. Completion pass: the farthest point of
/// the domain from the centers is a Voronoi vertex, so any Voronoi vertex at
/// distance `>= r` is added until none is left; the net is then exactly
/// maximal and the covering radius is read off the cells.
pub fn greedy_maximal_net_with(
    poly: &ConvexPolygon,
    r: f64,
    start: Point,
    resolution: usize,
) -> Result<Net> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::precondition(format!("net separation must be positive, got {r}")));
    }
    if !poly.contains(start) {
        return Err(Error::precondition("net start point lies outside the domain"));
    }
    let grid = candidate_grid(poly, resolution);
    let mut mind: Vec<f64> = grid.iter().map(|g| g.dist(start)).collect();
    let mut centers = vec![start];
    while let Some((i, d)) = argmax_lowest(&grid, |i| mind[i]) {
        if d < r {
            break;
        }
        let c = grid[i];
        centers.push(c);
        for (m, g) in mind.iter_mut().zip(&grid) {
            *m = m.min(g.dist(c));
        }
    }

    let mut completion_added = 0;
    let partition = loop {
        let partition = voronoi_partition(poly, &centers)?;
        let mut far: Vec<Point> = Vec::new();
        for (c, cell) in partition.centers.iter().zip(&partition.cells) {
            far.extend(cell.vertices().iter().copied().filter(|v| v.dist(*c) >= r));
        }
        // Distances are re-measured against all centers to guard ties.
        let pick = argmax_lowest(&far, |i| nearest(&centers, far[i]).1.sqrt());
        match pick {
            Some((i, d)) if d >= r => {
                centers.push(far[i]);
                completion_added += 1;
            }
            _ => break partition,
        }
    };
    Ok(Net {
        covering_radius: partition.covering_radius(),
        centers,
        r,
        ambient: poly.clone(),
        grid_resolution: resolution,
        completion_added,
    })
}

/// The first `count` points of a farthest-point ordering over the candidate grid.
pub fn farthest_point_centers(poly: &ConvexPolygon, count: usize, start: Point, resolution: usize) -> Result<Vec<Point>> {
    if !poly.contains(start) {
        return Err(Error::precondition("start point lies outside the domain"));
    }
    let grid = candidate_grid(poly, resolution);
    let mut mind: Vec<f64> = grid.iter().map(|g| g.dist(start)).collect();
    let mut centers = vec![start];
    while centers.len() < count {
        let (i, d) = argmax_lowest(&grid, |i| mind[i]).ok_or_else(|| Error::precondition("empty candidate grid"))?;
        if d == 0.0 {
            return Err(Error::precondition(format!("grid supports only {} distinct centers", centers.len())));
        }
        let c = grid[i];
        centers.push(c);
        for (m, g) in mind.iter_mut().zip(&grid) {
            *m = m.min(g.dist(c));
        }
    }
    Ok(centers)
}

/// Voronoi partition: each cell is `poly` clipped by the bisector half-planes
/// `|x - c_a| <= |x - c_b|` against every other center.
pub fn voronoi_partition(poly: &ConvexPolygon, centers: &[Point]) -> Result<VoronoiPartition> {
    if centers.is_empty() {
        return Err(Error::precondition("need at least one center"));
    }
    let tol = 1e-12 * poly.scale();
    for (i, c) in centers.iter().enumerate() {
        if !poly.contains(*c) {
            return Err(Error::precondition(format!("center {i} lies outside the domain")));
        }
        if centers[..i].iter().any(|d| d.dist(*c) <= tol) {
            return Err(Error::precondition(format!("center {i} duplicates an earlier center")));
        }
    }
    let cells = centers
        .iter()
        .enumerate()
        .map(|(a, ca)| {
            let mut cell = poly.clone();
            for (b, cb) in centers.iter().enumerate() {
                if a == b {
                    continue;
                }
                let normal = cb.sub(*ca);
                let offset = 0.5 * (cb.dot(*cb) - ca.dot(*ca));
                cell = cell.clip_halfplane(normal, offset).ok_or_else(|| {
                    Error::geometry(format!("Voronoi cell {a} collapsed while clipping against {b}"))
                })?;
            }
            Ok(cell)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VoronoiPartition {
        centers: centers.to_vec(),
        cells,
    })
}

/// `D({A_a}) = min over a != b of d(A_a, A_b)`.
pub fn family_separation(family: &[SubsetRegion]) -> Result<f64> {
    if family.len() < 2 {
        return Err(Error::precondition(format!(
            "family separation needs at least 2 regions, got {}",
            family.len()
        )));
    }
    let polys = family.iter().map(SubsetRegion::to_polygon).collect::<Result<Vec<_>>>()?;
    let mut best = f64::INFINITY;
    for i in 0..polys.len() {
        for j in i + 1..polys.len() {
            best = best.min(set_distance(
                &SubsetRegion::polygon(polys[i].clone()),
                &SubsetRegion::polygon(polys[j].clone()),
            )?);
        }
    }
    Ok(best)
}
