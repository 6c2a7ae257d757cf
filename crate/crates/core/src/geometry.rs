//! Convex planar geometry: polygons, clipped balls, set distances and
//! Monte Carlo estimates of ball/domain intersection areas.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of vertices used when a disk has to be treated as a polygon.
pub const BALL_POLYGON_VERTICES: usize = 64;

/// Minimum sample count accepted by the Monte Carlo estimators.
pub const MIN_MC_SAMPLES: usize = 10_000;

/// A point of the Euclidean plane. Serializes as `[x, y]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist2(&self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn sub(&self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(&self, other: Point) -> Point {
        Point::new(self.x + other.x, self.y + other.y)
    }

    pub fn scale(&self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    pub fn dot(&self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn midpoint(&self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    /// Rotation by `angle` radians about the origin.
    pub fn rotate(&self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

/// z-component of `(a - o) x (b - o)`; positive when `o, a, b` turn left.
pub fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Euclidean distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a.add(ab.scale(t)))
}

/// Bounded convex polygon with counterclockwise, strictly convex vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl TryFrom<Vec<Point>> for ConvexPolygon {
    type Error = Error;

    fn try_from(v: Vec<Point>) -> Result<Self> {
        ConvexPolygon::new(v)
    }
}

impl From<ConvexPolygon> for Vec<Point> {
    fn from(p: ConvexPolygon) -> Self {
        p.vertices
    }
}

impl ConvexPolygon {
    /// Builds a polygon from an ordered vertex list.
    ///
    /// Clockwise input is reversed. Repeated and collinear vertices are
    /// dropped; any remaining reflex turn is rejected.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::geometry("non-finite vertex coordinate"));
        }
        let mut v = vertices;
        if signed_area(&v) < 0.0 {
            v.reverse();
        }
        let v = normalize_ring(v);
        if v.len() < 3 {
            return Err(Error::geometry(format!(
                "polygon needs at least 3 non-collinear vertices, got {}",
                v.len()
            )));
        }
        let n = v.len();
        for i in 0..n {
            let turn = cross(v[i], v[(i + 1) % n], v[(i + 2) % n]);
            if turn <= 0.0 {
                return Err(Error::geometry(format!(
                    "vertex {} is not a strictly convex turn",
                    (i + 1) % n
                )));
            }
        }
        let area = signed_area(&v);
        if area <= 0.0 {
            return Err(Error::geometry(format!("non-positive area {area:e}")));
        }
        Ok(ConvexPolygon { vertices: v })
    }

    /// Convex hull of a point cloud (Andrew's monotone chain).
    pub fn hull(points: &[Point]) -> Result<Self> {
        let mut pts: Vec<Point> = points.to_vec();
        if pts.iter().any(|p| !p.is_finite()) {
            return Err(Error::geometry("non-finite point"));
        }
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup();
        if pts.len() < 3 {
            return Err(Error::geometry("hull needs at least 3 distinct points"));
        }
        let mut lower: Vec<Point> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0
            {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Point> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0
            {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        ConvexPolygon::new(lower)
    }

    /// Axis-aligned rectangle `[0, width] x [0, height]`.
    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        Self::new(vec![
            Point::new(0.0, 0.0),
            Point::new(width, 0.0),
            Point::new(width, height),
            Point::new(0.0, height),
        ])
    }

    pub fn unit_square() -> Self {
        Self::rectangle(1.0, 1.0).expect("unit square is valid")
    }

    /// Regular polygon centred at the origin with a vertex on the positive x-axis.
    pub fn regular(sides: usize, circumradius: f64) -> Result<Self> {
        if sides < 3 {
            return Err(Error::geometry("regular polygon needs at least 3 sides"));
        }
        let v = (0..sides)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / sides as f64;
                Point::new(circumradius * t.cos(), circumradius * t.sin())
            })
            .collect();
        Self::new(v)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Directed edges `(v_i, v_{i+1})`, wrapping around.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Largest vertex-to-vertex distance, found with rotating calipers over
    /// antipodal vertex/edge pairs.
    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        if n == 3 {
            return v[0].dist(v[1]).max(v[1].dist(v[2])).max(v[2].dist(v[0]));
        }
        let mut best: f64 = 0.0;
        let mut j = 1;
        for i in 0..n {
            let a = v[i];
            let b = v[(i + 1) % n];
            // Advance j while the triangle (a, b, v_j) keeps growing.
            let mut steps = 0;
            while steps < n && cross(a, b, v[(j + 1) % n]) > cross(a, b, v[j]) {
                j = (j + 1) % n;
                steps += 1;
            }
            best = best.max(a.dist(v[j])).max(b.dist(v[j]));
        }
        best
    }

    /// Vertex average; lies strictly inside a strictly convex polygon.
    pub fn centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let (sx, sy) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Point::new(sx / n, sy / n)
    }

    /// `(min, max)` corners of the bounding box.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Length scale used for relative tolerances.
    pub fn scale(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi.x - lo.x).max(hi.y - lo.y)
    }

    /// Closed-set membership with a tolerance relative to the polygon size.
    pub fn contains(&self, p: Point) -> bool {
        let tol = 1e-12 * self.scale();
        self.edges().all(|(a, b)| {
            let len = a.dist(b);
            cross(a, b, p) >= -tol * len
        })
    }

    /// Strict interior membership (no boundary tolerance).
    pub fn contains_strict(&self, p: Point) -> bool {
        self.edges().all(|(a, b)| cross(a, b, p) > 0.0)
    }

    /// Distance from `p` to the polygon (zero inside).
    pub fn distance_to_point(&self, p: Point) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Intersection with the closed half-plane `normal . x <= offset`.
    /// Returns `None` when the remainder has no interior.
    pub fn clip_halfplane(&self, normal: Point, offset: f64) -> Option<ConvexPolygon> {
        let v = &self.vertices;
        let n = v.len();
        let side: Vec<f64> = v.iter().map(|p| normal.dot(*p) - offset).collect();
        if side.iter().all(|&s| s <= 0.0) {
            return Some(self.clone());
        }
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let j = (i + 1) % n;
            let (si, sj) = (side[i], side[j]);
            if si <= 0.0 {
                out.push(v[i]);
            }
            if (si < 0.0 && sj > 0.0) || (si > 0.0 && sj < 0.0) {
                let t = si / (si - sj);
                out.push(Point::new(
                    v[i].x + t * (v[j].x - v[i].x),
                    v[i].y + t * (v[j].y - v[i].y),
                ));
            }
        }
        ConvexPolygon::new(out).ok()
    }

    /// Intersection with another convex polygon.
    pub fn intersect(&self, other: &ConvexPolygon) -> Option<ConvexPolygon> {
        let mut cur = self.clone();
        for (a, b) in other.edges() {
            // Left of a->b is inside; outward normal is (dy, -dx).
            let normal = Point::new(b.y - a.y, a.x - b.x);
            cur = cur.clip_halfplane(normal, normal.dot(a))?;
        }
        Some(cur)
    }

    pub fn translate(&self, t: Point) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|p| p.add(t)).collect(),
        }
    }

    /// Uniform scaling about the origin (`s > 0`).
    pub fn scaled(&self, s: f64) -> ConvexPolygon {
        assert!(s > 0.0, "scale factor must be positive");
        ConvexPolygon {
            vertices: self.vertices.iter().map(|p| p.scale(s)).collect(),
        }
    }

    pub fn rotated(&self, angle: f64) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|p| p.rotate(angle)).collect(),
        }
    }

    /// Homothetic copy scaled by `factor` about `anchor`.
    pub fn homothety(&self, anchor: Point, factor: f64) -> Result<ConvexPolygon> {
        ConvexPolygon::new(
            self.vertices
                .iter()
                .map(|p| anchor.add(p.sub(anchor).scale(factor)))
                .collect(),
        )
    }

    /// True when some edge line of either polygon separates the two.
    fn separated_from(&self, other: &ConvexPolygon) -> bool {
        fn has_separating_edge(a: &ConvexPolygon, b: &ConvexPolygon) -> bool {
            a.edges()
                .any(|(p, q)| b.vertices.iter().all(|&v| cross(p, q, v) < 0.0))
        }
        has_separating_edge(self, other) || has_separating_edge(other, self)
    }

    /// Euclidean distance between two convex polygons; zero when they meet.
    pub fn distance(&self, other: &ConvexPolygon) -> f64 {
        if !self.separated_from(other) {
            return 0.0;
        }
        let one_way = |a: &ConvexPolygon, b: &ConvexPolygon| {
            a.vertices
                .iter()
                .flat_map(|&p| b.edges().map(move |(s, t)| point_segment_distance(p, s, t)))
                .fold(f64::INFINITY, f64::min)
        };
        one_way(self, other).min(one_way(other, self))
    }
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

/// Drops repeated vertices and vertices whose turn is numerically flat.
fn normalize_ring(mut v: Vec<Point>) -> Vec<Point> {
    let scale = v
        .iter()
        .flat_map(|p| [p.x.abs(), p.y.abs()])
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let eps_len = 1e-12 * scale;
    loop {
        let n = v.len();
        if n < 3 {
            return v;
        }
        let flat = (0..n).find(|&i| {
            let prev = v[(i + n - 1) % n];
            let cur = v[i];
            let next = v[(i + 1) % n];
            cur.dist(next) <= eps_len
                || cross(prev, cur, next).abs() <= 1e-12 * prev.dist(cur) * cur.dist(next)
        });
        match flat {
            Some(i) => {
                v.remove(i);
            }
            None => return v,
        }
    }
}

/// A subset of an ambient domain: a convex polygon or a ball clipped to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubsetRegion {
    Polygon {
        polygon: ConvexPolygon,
    },
    Ball {
        center: Point,
        radius: f64,
        ambient: ConvexPolygon,
    },
}

impl SubsetRegion {
    pub fn polygon(polygon: ConvexPolygon) -> Self {
        SubsetRegion::Polygon { polygon }
    }

    pub fn ball(center: Point, radius: f64, ambient: &ConvexPolygon) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::precondition(format!("ball radius must be positive, got {radius}")));
        }
        if !ambient.contains(center) {
            return Err(Error::precondition("ball center lies outside the ambient domain"));
        }
        Ok(SubsetRegion::Ball {
            center,
            radius,
            ambient: ambient.clone(),
        })
    }

    /// Polygonal form: balls become an inscribed 64-gon clipped to the ambient domain.
    pub fn to_polygon(&self) -> Result<ConvexPolygon> {
        match self {
            SubsetRegion::Polygon { polygon } => Ok(polygon.clone()),
            SubsetRegion::Ball {
                center,
                radius,
                ambient,
            } => {
                let disk = ConvexPolygon::regular(BALL_POLYGON_VERTICES, *radius)?.translate(*center);
                disk.intersect(ambient)
                    .ok_or_else(|| Error::geometry("ball does not meet the ambient domain"))
            }
        }
    }

    pub fn area(&self) -> Result<f64> {
        Ok(self.to_polygon()?.area())
    }

    /// Uniform scaling of the region (and its ambient domain) about the origin.
    pub fn scaled(&self, s: f64) -> SubsetRegion {
        match self {
            SubsetRegion::Polygon { polygon } => SubsetRegion::Polygon {
                polygon: polygon.scaled(s),
            },
            SubsetRegion::Ball {
                center,
                radius,
                ambient,
            } => SubsetRegion::Ball {
                center: center.scale(s),
                radius: radius * s,
                ambient: ambient.scaled(s),
            },
        }
    }
}

/// Euclidean distance `inf { |x - y| : x in A, y in B }` between two regions.
pub fn set_distance(a: &SubsetRegion, b: &SubsetRegion) -> Result<f64> {
    let pa = a.to_polygon()?;
    let pb = b.to_polygon()?;
    // Evaluate in a canonical order so the result is exactly symmetric.
    let (first, second) = if canonical_le(&pa, &pb) { (&pa, &pb) } else { (&pb, &pa) };
    Ok(first.distance(second))
}

fn canonical_le(a: &ConvexPolygon, b: &ConvexPolygon) -> bool {
    for (p, q) in a.vertices().iter().zip(b.vertices()) {
        match p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    a.len() <= b.len()
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Uniform points in the closed unit disk from a ChaCha8 stream seeded with
/// `seed`: radius `sqrt(u)`, angle `2 pi v`, two uniforms per point.
pub fn unit_disk_samples(samples: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            let rho = u.sqrt();
            let (s, c) = (2.0 * PI * v).sin_cos();
            Point::new(rho * c, rho * s)
        })
        .collect()
}

/// Fraction of `x + r * u` (for `u` in `disk`) that lands in `poly`.
pub(crate) fn hit_fraction(poly: &ConvexPolygon, x: Point, r: f64, disk: &[Point]) -> f64 {
    let hits = disk
        .iter()
        .filter(|u| poly.contains(x.add(u.scale(r))))
        .count();
    hits as f64 / disk.len() as f64
}

pub(crate) fn check_ball_inputs(poly: &ConvexPolygon, x: Point, r: f64, samples: usize) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::precondition(format!("radius must be positive, got {r}")));
    }
    if samples < MIN_MC_SAMPLES {
        return Err(Error::precondition(format!(
            "need at least {MIN_MC_SAMPLES} samples, got {samples}"
        )));
    }
    if !poly.contains(x) {
        return Err(Error::precondition(format!(
            "point ({}, {}) is outside the domain",
            x.x, x.y
        )));
    }
    Ok(())
}

/// Monte Carlo estimate of `area(B(x, r) ∩ poly)`.
///
/// Samples are drawn uniformly in `B(x, r)` by [`unit_disk_samples`], so the
/// result is deterministic for fixed `(samples, seed)`.
pub fn ball_intersection_area(
    poly: &ConvexPolygon,
    x: Point,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_ball_inputs(poly, x, r, samples)?;
    let disk = unit_disk_samples(samples, seed);
    let f = hit_fraction(poly, x, r, &disk);
    let ball = PI * r * r;
    Ok(McEstimate {
        estimate: ball * f,
        std_error: ball * (f * (1.0 - f) / samples as f64).sqrt(),
    })
}
