//! Domain generators: rectangles by aspect ratio, regular polygons, random
//! convex hulls, boxes and literal polygons.

use std::f64::consts::TAU;

use neumann_core::boxspec::BoxDomain;
use neumann_core::geometry::{ConvexPolygon, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Give up on a random hull after this many degenerate draws.
const MAX_HULL_ATTEMPTS: usize = 1000;

/// One concrete domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Rectangle {
        aspect: f64,
    },
    Regular {
        sides: usize,
        #[serde(default = "one")]
        circumradius: f64,
    },
    RandomHull {
        points: usize,
    },
    Box {
        sides: Vec<f64>,
    },
    Polygon {
        vertices: ConvexPolygon,
    },
}

/// A config entry that expands to one or more domains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Rectangle {
        aspects: Vec<f64>,
    },
    Regular {
        sides: Vec<usize>,
        #[serde(default = "one")]
        circumradius: f64,
    },
    /// `count` hulls of `points` uniform points in the unit disk, seeds
    /// `seed, seed + 1, ...`.
    RandomHull {
        count: usize,
        points: usize,
        seed: u64,
    },
    /// For every dimension `d` in `dims`, the box whose i-th side is
    /// `sides[i % sides.len()]`.
    Box {
        dims: Vec<usize>,
        sides: Vec<f64>,
    },
    Polygon {
        vertices: ConvexPolygon,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Polygon(ConvexPolygon),
    Box(BoxDomain),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Polygon(_) => 2,
            Domain::Box(b) => b.dim(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub id: String,
    pub domain: Domain,
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

pub fn random_hull(points: usize, seed: u64) -> Result<ConvexPolygon, CliError> {
    if points < 3 {
        return Err(CliError::Config(format!("random hull needs at least 3 points, got {points}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_HULL_ATTEMPTS {
        let pts: Vec<Point> = (0..points)
            .map(|_| {
                let r = rng.random::<f64>().sqrt();
                let t = TAU * rng.random::<f64>();
                Point::new(r * t.cos(), r * t.sin())
            })
            .collect();
        if let Ok(h) = ConvexPolygon::hull(&pts) {
            if h.len() >= 3 {
                return Ok(h);
            }
        }
    }
    Err(CliError::Config(format!("no non-degenerate hull from {points} points with seed {seed}")))
}

/// Builds one domain. `seed` only matters for random hulls.
pub fn generate_domain(spec: &DomainSpec, seed: u64) -> Result<Instance, CliError> {
    let geom = |e: neumann_core::Error| CliError::Config(e.to_string());
    Ok(match spec {
        DomainSpec::Rectangle { aspect } => Instance {
            id: format!("rect[{}]", fmt_num(*aspect)),
            domain: Domain::Polygon(ConvexPolygon::rectangle(1.0, *aspect).map_err(geom)?),
        },
        DomainSpec::Regular { sides, circumradius } => Instance {
            id: format!("regular[{sides},{}]", fmt_num(*circumradius)),
            domain: Domain::Polygon(ConvexPolygon::regular(*sides, *circumradius).map_err(geom)?),
        },
        DomainSpec::RandomHull { points } => Instance {
            id: format!("hull[{points},seed={seed}]"),
            domain: Domain::Polygon(random_hull(*points, seed)?),
        },
        DomainSpec::Box { sides } => {
            let b = BoxDomain::new(sides.clone()).map_err(geom)?;
            Instance {
                id: b.label(),
                domain: Domain::Box(b),
            }
        }
        DomainSpec::Polygon { vertices } => Instance {
            id: format!(
                "polygon[{}]",
                vertices
                    .vertices()
                    .iter()
                    .map(|p| format!("({},{})", fmt_num(p.x), fmt_num(p.y)))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            domain: Domain::Polygon(vertices.clone()),
        },
    })
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        match self {
            GeneratorSpec::Rectangle { aspects } if aspects.is_empty() => bad("empty aspect list"),
            GeneratorSpec::Regular { sides, .. } if sides.is_empty() => bad("empty side-count list"),
            GeneratorSpec::RandomHull { count: 0, .. } => bad("random hull count is zero"),
            GeneratorSpec::Box { dims, sides } if dims.is_empty() || sides.is_empty() => {
                bad("box generator needs non-empty dims and sides")
            }
            _ => self.expand().map(|_| ()),
        }
    }

    pub fn expand(&self) -> Result<Vec<Instance>, CliError> {
        match self {
            GeneratorSpec::Rectangle { aspects } => aspects
                .iter()
                .map(|&aspect| generate_domain(&DomainSpec::Rectangle { aspect }, 0))
                .collect(),
            GeneratorSpec::Regular { sides, circumradius } => sides
                .iter()
                .map(|&s| {
                    generate_domain(
                        &DomainSpec::Regular {
                            sides: s,
                            circumradius: *circumradius,
                        },
                        0,
                    )
                })
                .collect(),
            GeneratorSpec::RandomHull { count, points, seed } => (0..*count as u64)
                .map(|i| generate_domain(&DomainSpec::RandomHull { points: *points }, seed.wrapping_add(i)))
                .collect(),
            GeneratorSpec::Box { dims, sides } => dims
                .iter()
                .map(|&d| {
                    let s = (0..d).map(|i| sides[i % sides.len()]).collect();
                    generate_domain(&DomainSpec::Box { sides: s }, 0)
                })
                .collect(),
            GeneratorSpec::Polygon { vertices } => Ok(vec![generate_domain(
                &DomainSpec::Polygon {
                    vertices: vertices.clone(),
                },
                0,
            )?]),
        }
    }
}

/// Expands every generator in order.
pub fn expand_all(specs: &[GeneratorSpec]) -> Result<Vec<Instance>, CliError> {
    let mut out = Vec::new();
    for s in specs {
        out.extend(s.expand()?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_aspect_four() {
        let i = generate_domain(&DomainSpec::Rectangle { aspect: 4.0 }, 0).unwrap();
        assert_eq!(i.id, "rect[4]");
        let Domain::Polygon(p) = i.domain else { panic!() };
        assert_eq!(p, ConvexPolygon::rectangle(1.0, 4.0).unwrap());
        assert_eq!(p.area(), 4.0);
    }

    #[test]
    fn regular_hexagon_on_unit_circle() {
        let i = generate_domain(
            &DomainSpec::Regular {
                sides: 6,
                circumradius: 1.0,
            },
            0,
        )
        .unwrap();
        let Domain::Polygon(p) = i.domain else { panic!() };
        assert_eq!(p.len(), 6);
        for v in p.vertices() {
            assert!((v.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn random_hull_is_deterministic() {
        let a = random_hull(20, 7).unwrap();
        let b = random_hull(20, 7).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        assert!(a.len() >= 3);
        assert_ne!(random_hull(20, 8).unwrap().vertices(), a.vertices());
        assert!(random_hull(2, 7).is_err());
    }

    #[test]
    fn box_generator_cycles_sides() {
        let g = GeneratorSpec::Box {
            dims: vec![1, 3],
            sides: vec![1.0, 2.0],
        };
        let ids: Vec<String> = g.expand().unwrap().into_iter().map(|i| i.id).collect();
        assert_eq!(ids, vec!["box[1]", "box[1,2,1]"]);
    }

    #[test]
    fn generator_json_roundtrip() {
        let text = r#"[{"kind":"random_hull","count":2,"points":12,"seed":5},{"kind":"regular","sides":[3]}]"#;
        let specs: Vec<GeneratorSpec> = serde_json::from_str(text).unwrap();
        let all = expand_all(&specs).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(all[0].id, "hull[12,seed=5]");
        assert_eq!(all[1].id, "hull[12,seed=6]");
    }
}
