use neumann_cli::config::ExperimentConfig;
use neumann_cli::domains::random_hull;
use neumann_cli::{generate_domain, DomainSpec};
use neumann_core::geometry::ConvexPolygon;
use proptest::prelude::*;

fn counter_clockwise(p: &ConvexPolygon) -> bool {
    let v = p.vertices();
    (0..v.len()).all(|i| {
        let (a, b, c) = (v[i], v[(i + 1) % v.len()], v[(i + 2) % v.len()]);
        (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x) > 0.0
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_hulls_are_reproducible_convex_and_in_the_disk(points in 3usize..60, seed in any::<u64>()) {
        let a = random_hull(points, seed).unwrap();
        let b = random_hull(points, seed).unwrap();
        prop_assert_eq!(a.vertices(), b.vertices());
        prop_assert!(a.len() >= 3 && a.len() <= points);
        prop_assert!(counter_clockwise(&a));
        prop_assert!(a.vertices().iter().all(|v| v.x.hypot(v.y) <= 1.0));
    }

    #[test]
    fn rectangle_ids_and_dimension(aspect in 0.05f64..20.0) {
        let inst = generate_domain(&DomainSpec::Rectangle { aspect }, 0).unwrap();
        prop_assert_eq!(inst.id, format!("rect[{aspect}]"));
        prop_assert_eq!(inst.domain.dim(), 2);
    }

    #[test]
    fn config_hash_tracks_content(seed in any::<u64>()) {
        let mut cfg = ExperimentConfig::bundled();
        let base = cfg.hash();
        cfg.monte_carlo.seed = seed;
        prop_assert_eq!(cfg.hash() == base, seed == ExperimentConfig::bundled().monte_carlo.seed);
        prop_assert_eq!(cfg.hash().len(), 64);
    }
}
