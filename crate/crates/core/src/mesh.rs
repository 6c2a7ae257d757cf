//! Triangle meshes of convex polygons: a centroid fan plus uniform
//! midpoint (red) refinement.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cross, ConvexPolygon, Point};

/// Vertex-count window used when picking a default refinement level.
pub const DEFAULT_VERTEX_RANGE: (usize, usize) = (5_000, 50_000);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex-index triples.
    pub triangles: Vec<[usize; 3]>,
    #[serde(skip)]
    pub boundary_edges: Vec<[usize; 2]>,
}

/// Fan triangulation `(centroid, v_i, v_{i+1})` of a convex polygon.
pub fn triangulate(poly: &ConvexPolygon) -> TriMesh {
    let n = poly.len();
    let mut vertices = poly.vertices().to_vec();
    vertices.push(poly.centroid());
    let triangles = (0..n).map(|i| [n, i, (i + 1) % n]).collect();
    let boundary_edges = (0..n).map(|i| [i, (i + 1) % n]).collect();
    TriMesh {
        vertices,
        triangles,
        boundary_edges,
    }
}

/// Splits every triangle into four through its edge midpoints, `levels` times.
pub fn refine(mesh: &TriMesh, levels: usize) -> TriMesh {
    let mut cur = mesh.clone();
    for _ in 0..levels {
        cur = refine_once(&cur);
    }
    cur
}

fn refine_once(mesh: &TriMesh) -> TriMesh {
    let mut vertices = mesh.vertices.clone();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::with_capacity(mesh.triangles.len() * 2);
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoints.entry(key).or_insert_with(|| {
            vertices.push(vertices[a].midpoint(vertices[b]));
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(mesh.triangles.len() * 4);
    for &[a, b, c] in &mesh.triangles {
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    let mut boundary_edges = Vec::with_capacity(mesh.boundary_edges.len() * 2);
    for &[a, b] in &mesh.boundary_edges {
        let m = mid(a, b, &mut vertices);
        boundary_edges.push([a, m]);
        boundary_edges.push([m, b]);
    }
    TriMesh {
        vertices,
        triangles,
        boundary_edges,
    }
}

/// Vertex count after `levels` refinements of the fan of an `n`-gon.
pub fn fan_vertex_count(n: usize, levels: usize) -> usize {
    let (mut v, mut e, mut t) = (n + 1, 2 * n, n);
    for _ in 0..levels {
        v += e;
        e = 2 * e + 3 * t;
        t *= 4;
    }
    v
}

/// Smallest refinement level whose fan mesh has at least `min_vertices` vertices.
pub fn levels_for_vertex_count(poly: &ConvexPolygon, min_vertices: usize) -> usize {
    let mut levels = 0;
    while fan_vertex_count(poly.len(), levels) < min_vertices {
        levels += 1;
    }
    levels
}

/// Fan plus refinement to the default vertex window.
pub fn default_levels(poly: &ConvexPolygon) -> usize {
    levels_for_vertex_count(poly, DEFAULT_VERTEX_RANGE.0)
}

impl TriMesh {
    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * cross(a, b, c)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Distinct undirected edges, sorted.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<[usize; 2]> = self
            .triangles
            .iter()
            .flat_map(|&[a, b, c]| [[a, b], [b, c], [c, a]])
            .map(|[a, b]| [a.min(b), a.max(b)])
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges()
            .iter()
            .map(|&[a, b]| self.vertices[a].dist(self.vertices[b]))
            .fold(0.0, f64::max)
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut best = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let p = self.triangle_points(t);
            for i in 0..3 {
                let u = p[(i + 1) % 3].sub(p[i]);
                let v = p[(i + 2) % 3].sub(p[i]);
                let angle = (u.x * v.y - u.y * v.x).abs().atan2(u.dot(v));
                best = best.min(angle);
            }
        }
        best
    }

    /// `V - E + F` with the outer face excluded; 1 for a disk.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges().len() as i64 + self.triangles.len() as i64
    }

    /// Checks orientation, vertex usage, and edge-connectivity.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        let mut used = vec![false; nv];
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return Err(Error::geometry(format!("triangle {t} references a missing vertex")));
            }
            if self.triangle_area(t) <= 0.0 {
                return Err(Error::geometry(format!("triangle {t} has non-positive area")));
            }
            for &i in tri {
                used[i] = true;
            }
        }
        if used.iter().any(|u| !u) {
            return Err(Error::geometry("mesh has vertices not used by any triangle"));
        }
        // Union-find over triangles sharing an edge.
        let mut parent: Vec<usize> = (0..self.triangles.len()).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut owner: HashMap<[usize; 2], usize> = HashMap::new();
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            for [x, y] in [[a, b], [b, c], [c, a]] {
                let key = [x.min(y), x.max(y)];
                if let Some(&s) = owner.get(&key) {
                    let (rs, rt) = (find(&mut parent, s), find(&mut parent, t));
                    parent[rs] = rt;
                } else {
                    owner.insert(key, t);
                }
            }
        }
        let root = find(&mut parent, 0);
        if (0..self.triangles.len()).any(|t| find(&mut parent, t) != root) {
            return Err(Error::geometry("mesh is not edge-connected"));
        }
        Ok(())
    }

    /// JSON dump `{vertices, triangles}` for external visualisation.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mesh serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fan_counts() {
        let m = triangulate(&ConvexPolygon::unit_square());
        assert_eq!((m.triangles.len(), m.vertices.len()), (4, 5));
        let tri = ConvexPolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        let m = triangulate(&tri);
        assert_eq!((m.triangles.len(), m.vertices.len()), (3, 4));
        m.validate().unwrap();
    }

    #[test]
    fn dodecagon_area() {
        let p = ConvexPolygon::regular(12, 1.3).unwrap();
        let m = triangulate(&p);
        assert_eq!(m.triangles.len(), 12);
        assert_relative_eq!(m.area(), p.area(), max_relative = 1e-12);
    }

    #[test]
    fn refine_counts() {
        let m = triangulate(&ConvexPolygon::unit_square());
        assert_eq!(refine(&m, 0), m);
        let r = refine(&m, 1);
        assert_eq!(r.triangles.len(), 16);
        assert_eq!(r.vertices.len(), fan_vertex_count(4, 1));
        let r3 = refine(&m, 3);
        assert_eq!(r3.vertices.len(), fan_vertex_count(4, 3));
        assert_eq!(r3.boundary_edges.len(), 4 * 8);
        assert_eq!(r3.euler_characteristic(), 1);
        r3.validate().unwrap();
    }

    #[test]
    fn refinement_preserves_area_and_angles() {
        let p = ConvexPolygon::hull(&[
            Point::new(0.1, 0.0),
            Point::new(1.3, 0.2),
            Point::new(1.0, 1.1),
            Point::new(-0.2, 0.7),
            Point::new(0.4, -0.3),
        ])
        .unwrap();
        let m = triangulate(&p);
        let r = refine(&m, 3);
        assert_relative_eq!(r.area(), m.area(), max_relative = 1e-12);
        assert!((r.min_angle() - m.min_angle()).abs() < 1e-9);
        assert_relative_eq!(r.max_edge_length(), m.max_edge_length() / 8.0, max_relative = 1e-12);
    }

    #[test]
    fn default_levels_land_in_window() {
        for p in [
            ConvexPolygon::unit_square(),
            ConvexPolygon::regular(3, 1.0).unwrap(),
            ConvexPolygon::regular(17, 1.0).unwrap(),
        ] {
            let v = fan_vertex_count(p.len(), default_levels(&p));
            assert!((DEFAULT_VERTEX_RANGE.0..=DEFAULT_VERTEX_RANGE.1).contains(&v), "{v}");
        }
    }

    #[test]
    fn dump_has_vertices_and_triangles() {
        let m = triangulate(&ConvexPolygon::unit_square());
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["vertices"].as_array().unwrap().len(), 5);
        assert_eq!(v["triangles"][0], serde_json::json!([4, 0, 1]));
    }
}
