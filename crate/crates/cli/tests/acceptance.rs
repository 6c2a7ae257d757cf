//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use neumann_cli::domains::random_hull;
use neumann_core::bounds::{
    bishop_gromov_check, borel_family_bound, cgy_bound, kroger_ratio, partition_lower_bound_check,
    payne_weinberger_bound, replay_universal_proof, FamilyVariant,
};
use neumann_core::boxspec::{box_diameter_volume, box_spectrum, BoxDomain};
use neumann_core::fem::{neumann_spectrum, Spectrum};
use neumann_core::geometry::{point_segment_distance, ConvexPolygon, Point, SubsetRegion};
use neumann_core::partition::{farthest_point_centers, greedy_maximal_net, voronoi_partition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PI2: f64 = PI * PI;
const BIN: &str = env!("CARGO_BIN_EXE_neumann-lab");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn point_in(poly: &ConvexPolygon, rng: &mut ChaCha8Rng) -> Point {
    let (lo, hi) = poly.bounding_box();
    loop {
        let p = Point::new(
            lo.x + rng.random::<f64>() * (hi.x - lo.x),
            lo.y + rng.random::<f64>() * (hi.y - lo.y),
        );
        if poly.contains_strict(p) {
            return p;
        }
    }
}

fn boundary_distance(poly: &ConvexPolygon, x: Point) -> f64 {
    poly.edges()
        .map(|(a, b)| point_segment_distance(x, a, b))
        .fold(f64::INFINITY, f64::min)
}

fn lowest_vertex(poly: &ConvexPolygon) -> Point {
    *poly
        .vertices()
        .iter()
        .min_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)))
        .unwrap()
}

fn fem_oracle() -> Outcome {
    let start = Instant::now();
    let sq = neumann_spectrum(&ConvexPolygon::unit_square(), 5, 6).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let exact_sq = [PI2, PI2, 2.0 * PI2, 4.0 * PI2, 4.0 * PI2];
    let err_sq = (1..=5).map(|k| rel(sq.values[k], exact_sq[k - 1])).fold(0.0, f64::max);
    let rect = neumann_spectrum(&ConvexPolygon::rectangle(1.0, 2.0).unwrap(), 5, 6).unwrap();
    let exact = box_spectrum(&BoxDomain::new(vec![1.0, 2.0]).unwrap(), 5).unwrap();
    let err_rect = (1..=5).map(|k| rel(rect.values[k], exact.values[k])).fold(0.0, f64::max);
    let vertices = sq.vertex_count.unwrap();
    outcome(
        vertices >= 5000 && err_sq <= 0.01 && err_rect <= 0.01 && secs < 60.0,
        format!(
            "square: {vertices} vertices, max rel err {err_sq:.2e}, {secs:.2} s; [1,2]: max rel err {err_rect:.2e}"
        ),
    )
}

fn modes_below(sides: &[f64], threshold: f64, index: &mut Vec<u32>, out: &mut Vec<f64>) {
    if index.len() == sides.len() {
        let v: f64 = index
            .iter()
            .zip(sides)
            .map(|(&p, &a)| {
                let w = PI * p as f64 / a;
                w * w
            })
            .sum();
        if v <= threshold {
            out.push(v);
        }
        return;
    }
    let axis = index.len();
    let mut p = 0u32;
    loop {
        let w = PI * p as f64 / sides[axis];
        if w * w > threshold {
            break;
        }
        index.push(p);
        modes_below(sides, threshold, index, out);
        index.pop();
        p += 1;
    }
}

/// Doubles a threshold until it holds `m + 1` modes, then sorts all of them.
fn exhaustive_box(sides: &[f64], m: usize) -> Vec<f64> {
    let mut t = PI2;
    loop {
        let mut v = Vec::new();
        modes_below(sides, t, &mut Vec::new(), &mut v);
        if v.len() > m {
            v.sort_by(f64::total_cmp);
            v.truncate(m + 1);
            return v;
        }
        t *= 2.0;
    }
}

fn box_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for i in 0..25 {
        let n = 1 + i % 4;
        let m = if i < 4 { 100 } else { rng.random_range(1..=100) };
        let sides: Vec<f64> = (0..n).map(|_| 0.3 + 2.0 * rng.random::<f64>()).collect();
        let fast = box_spectrum(&BoxDomain::new(sides.clone()).unwrap(), m).unwrap().values;
        if fast != exhaustive_box(&sides, m) {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("25 random boxes (n <= 4, m <= 100), {mismatches} mismatches"))
}

fn payne_weinberger() -> Outcome {
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let p = random_hull(12 + (seed as usize % 10), 1000 + seed).unwrap();
        let s = neumann_spectrum(&p, 1, 5).unwrap();
        let r = payne_weinberger_bound(&s, p.diameter()).unwrap();
        worst = worst.max(r.implied_constant);
        failures += usize::from(r.pass != Some(true));
    }
    let mut ratios = Vec::new();
    for eps in [0.2, 0.1, 0.05] {
        let p = ConvexPolygon::rectangle(1.0, eps).unwrap();
        let s = neumann_spectrum(&p, 1, 7).unwrap();
        let r = payne_weinberger_bound(&s, p.diameter()).unwrap();
        failures += usize::from(r.pass != Some(true));
        ratios.push(r.implied_constant);
    }
    let monotone = ratios.windows(2).all(|w| w[0] < w[1]) && ratios[2] < 1.0 && ratios[2] > 0.98;
    outcome(
        failures == 0 && monotone,
        format!(
            "50 hulls: {failures} failures, max bound/lambda_1 {worst:.4}; thin rectangles eps 0.2/0.1/0.05: {:.4} {:.4} {:.4}",
            ratios[0], ratios[1], ratios[2]
        ),
    )
}

fn cell_spectra(cells: &[ConvexPolygon], levels: usize) -> Vec<Spectrum> {
    cells.iter().map(|c| neumann_spectrum(c, 1, levels).unwrap()).collect()
}

fn partition_bound() -> Outcome {
    let sq = ConvexPolygon::unit_square();
    let parent = neumann_spectrum(&sq, 4, 6).unwrap();
    let half = ConvexPolygon::rectangle(0.5, 1.0).unwrap();
    let halves = vec![half.clone(), half.translate(Point::new(0.5, 0.0))];
    let h = partition_lower_bound_check(&parent, &cell_spectra(&halves, 6), 1).unwrap();
    let q = ConvexPolygon::rectangle(0.5, 0.5).unwrap();
    let quarters: Vec<ConvexPolygon> = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)]
        .iter()
        .map(|&(x, y)| q.translate(Point::new(x, y)))
        .collect();
    let qr = partition_lower_bound_check(&parent, &cell_spectra(&quarters, 5), 3).unwrap();
    let mut random_failures = 0;
    for seed in 0..10u64 {
        let poly = random_hull(15, 500 + seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = 2 + (seed as usize % 4);
        let centers: Vec<Point> = (0..count).map(|_| point_in(&poly, &mut rng)).collect();
        let vor = voronoi_partition(&poly, &centers).unwrap();
        let parent = neumann_spectrum(&poly, count, 5).unwrap();
        let r = partition_lower_bound_check(&parent, &cell_spectra(&vor.cells, 5), count - 1).unwrap();
        random_failures += usize::from(r.pass != Some(true));
    }
    let pass = h.pass == Some(true)
        && (h.implied_constant - 1.0).abs() <= 0.02
        && qr.pass == Some(true)
        && (qr.implied_constant - 1.0).abs() <= 0.02
        && random_failures == 0;
    outcome(
        pass,
        format!(
            "halved: min cell/parent {:.4}; quartered: {:.4}; 10 random Voronoi partitions: {random_failures} failures",
            h.implied_constant, qr.implied_constant
        ),
    )
}

fn bishop_gromov() -> Outcome {
    let mut failures = 0;
    for i in 0..100u64 {
        let poly = random_hull(8 + (i as usize % 12), 2000 + i).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(i);
        let x = point_in(&poly, &mut rng);
        let big_r = poly.diameter() * (0.05 + 0.95 * rng.random::<f64>());
        let r = big_r * (0.05 + 0.9 * rng.random::<f64>());
        let rep = bishop_gromov_check(&poly, x, r, big_r, 20_000, i).unwrap();
        failures += usize::from(rep.pass != Some(true));
    }
    let mut interior_off = 0;
    for i in 0..20u64 {
        let poly = random_hull(15, 3000 + i).unwrap();
        let x = poly.centroid();
        let big_r = 0.9 * boundary_distance(&poly, x);
        let rep = bishop_gromov_check(&poly, x, 0.4 * big_r, big_r, 20_000, i).unwrap();
        let sigma = rep.extras["std_error"];
        interior_off += usize::from((rep.lhs - rep.rhs_core).abs() > 3.0 * sigma);
    }
    outcome(
        failures == 0 && interior_off == 0,
        format!("100 random instances: {failures} failures; 20 interior-ball cases off equality by > 3 sigma: {interior_off}"),
    )
}

fn voronoi_net() -> Outcome {
    let (mut worst_defect, mut diam_violations, mut sep_violations, mut instances) = (0.0f64, 0, 0, 0);
    for seed in 0..30u64 {
        let poly = random_hull(10 + (seed as usize % 15), 4000 + seed).unwrap();
        for frac in [0.15, 0.3, 0.6] {
            let r = frac * poly.diameter();
            let net = greedy_maximal_net(&poly, r, lowest_vertex(&poly)).unwrap();
            let vor = voronoi_partition(&poly, &net.centers).unwrap();
            instances += 1;
            worst_defect = worst_defect.max((vor.total_area() - poly.area()).abs() / poly.area());
            diam_violations += vor
                .cells
                .iter()
                .filter(|c| c.diameter() > 2.0 * net.covering_radius)
                .count();
            sep_violations += usize::from(net.min_separation() < r || !net.is_maximal());
        }
    }
    outcome(
        worst_defect < 1e-9 && diam_violations == 0 && sep_violations == 0,
        format!(
            "{instances} nets: max area defect {worst_defect:.1e}, diameter violations {diam_violations}, separation/maximality violations {sep_violations}"
        ),
    )
}

fn kroger() -> Outcome {
    let mut max_c: f64 = 0.0;
    let mut finite = true;
    let mut boxes = Vec::new();
    for n in 1..=6 {
        boxes.push(BoxDomain::cube(n, 1.0).unwrap());
        boxes.push(BoxDomain::new((0..n).map(|i| 1.0 + 0.5 * i as f64).collect()).unwrap());
    }
    for b in &boxes {
        let s = box_spectrum(b, 50).unwrap();
        let (d, _) = box_diameter_volume(b);
        for k in 1..=50 {
            let c = kroger_ratio(&s, d, k).unwrap().implied_constant;
            finite &= c.is_finite();
            max_c = max_c.max(c);
        }
    }
    let mut max_poly: f64 = 0.0;
    for seed in 0..20u64 {
        let p = random_hull(14, 6000 + seed).unwrap();
        let s = neumann_spectrum(&p, 10, 5).unwrap();
        for k in 1..=10 {
            let c = kroger_ratio(&s, p.diameter(), k).unwrap().implied_constant;
            finite &= c.is_finite();
            max_poly = max_poly.max(c);
        }
    }
    // 1D: lambda_k = (pi k / a)^2 and Diam = a, so the constant is pi^2 up to rounding.
    let mut max_ulps = 0.0f64;
    for a in [1.0, 2.5] {
        let b = BoxDomain::new(vec![a]).unwrap();
        let s = box_spectrum(&b, 50).unwrap();
        for k in 1..=50 {
            let c = kroger_ratio(&s, a, k).unwrap().implied_constant;
            max_ulps = max_ulps.max((c - PI2).abs() / (PI2 * f64::EPSILON));
        }
    }
    outcome(
        finite && max_ulps <= 4.0,
        format!("max constant boxes {max_c:.4}, polygons {max_poly:.4}; 1D equals pi^2 within {max_ulps:.0} ulp"),
    )
}

fn corner_squares(s: f64, count: usize) -> Vec<SubsetRegion> {
    let a = ConvexPolygon::rectangle(s, s).unwrap();
    [(0.0, 0.0), (1.0 - s, 1.0 - s), (1.0 - s, 0.0), (0.0, 1.0 - s)]
        .iter()
        .take(count)
        .map(|&(x, y)| SubsetRegion::polygon(a.translate(Point::new(x, y))))
        .collect()
}

fn family_bounds() -> Outcome {
    let mut rows = 0;
    let mut worst: f64 = 0.0;
    let mut max_c: f64 = 0.0;
    let mut check = |lk: f64, fam: &[SubsetRegion], vol: f64, k: usize| {
        let cgy = cgy_bound(lk, fam, vol, k).unwrap();
        let borel = borel_family_bound(lk, fam, vol, k, 2, FamilyVariant::Full).unwrap();
        let expected = 4.0 / ((k + 1) as f64).ln().powi(2);
        worst = worst.max(rel(borel.rhs_core / cgy.rhs_core, expected));
        max_c = max_c.max(cgy.implied_constant).max(borel.implied_constant);
        rows += 1;
    };
    let sq = box_spectrum(&BoxDomain::new(vec![1.0, 1.0]).unwrap(), 4).unwrap();
    for s in [0.1, 0.25] {
        for k in 1..=3 {
            check(sq.values[k], &corner_squares(s, k + 1), 1.0, k);
        }
    }
    let mut domains: Vec<ConvexPolygon> = (0..6).map(|i| random_hull(16, 7000 + i).unwrap()).collect();
    domains.push(ConvexPolygon::rectangle(1.0, 3.0).unwrap());
    for p in &domains {
        let s = neumann_spectrum(p, 6, 4).unwrap();
        let centers = farthest_point_centers(p, 7, lowest_vertex(p), 128).unwrap();
        for k in 1..=6 {
            let c = &centers[..k + 1];
            let mut sep = f64::INFINITY;
            for i in 0..c.len() {
                for j in i + 1..c.len() {
                    sep = sep.min(c[i].dist(c[j]));
                }
            }
            let fam: Vec<SubsetRegion> = c.iter().map(|x| SubsetRegion::ball(*x, sep / 4.0, p).unwrap()).collect();
            check(s.values[k], &fam, p.area(), k);
        }
    }
    // Same cross-check on every family row of the default sweep.
    let sweep = default_sweep();
    let mut sweep_rows = 0;
    for fam in ["net_balls", "homothetic"] {
        let cgy: Vec<_> = sweep.rows.iter().filter(|r| r.inequality == format!("cgy/{fam}")).collect();
        let borel: Vec<_> = sweep
            .rows
            .iter()
            .filter(|r| r.inequality == format!("borel_family/{fam}"))
            .collect();
        for (a, b) in cgy.iter().zip(&borel) {
            assert_eq!((&a.domain_id, a.k), (&b.domain_id, b.k));
            let (ra, rb) = (a.report.as_ref().unwrap(), b.report.as_ref().unwrap());
            let expected = 4.0 / ((a.k + 1) as f64).ln().powi(2);
            worst = worst.max(rel(rb.rhs_core / ra.rhs_core, expected));
            max_c = max_c.max(ra.implied_constant).max(rb.implied_constant);
            sweep_rows += 1;
        }
    }
    outcome(
        worst <= 1e-12 && max_c.is_finite() && rows > 0 && sweep_rows > 0,
        format!(
            "{rows} library rows + {sweep_rows} sweep rows, max |ratio - n^2/ln(k+1)^2| rel {worst:.1e}, max implied constant {max_c:.4}"
        ),
    )
}

struct SweepRuns {
    first_csv: Vec<u8>,
    second_csv: Vec<u8>,
    report: neumann_cli::SweepReport,
}

fn run_default_sweep(dir: &std::path::Path) -> Vec<u8> {
    let out = Command::new(BIN).arg("sweep").arg("--out").arg(dir).output().unwrap();
    assert!(
        matches!(out.status.code(), Some(0)),
        "sweep exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    std::fs::read(dir.join("sweep.csv")).unwrap()
}

fn sweeps() -> &'static SweepRuns {
    static RUNS: OnceLock<SweepRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let first_csv = run_default_sweep(a.path());
        let second_csv = run_default_sweep(b.path());
        let report = serde_json::from_str(&std::fs::read_to_string(a.path().join("sweep.json")).unwrap()).unwrap();
        SweepRuns {
            first_csv,
            second_csv,
            report,
        }
    })
}

fn default_sweep() -> &'static neumann_cli::SweepReport {
    &sweeps().report
}

fn universal_ratio() -> Outcome {
    let rep = default_sweep();
    let mut best: Option<(f64, String, usize, usize)> = None;
    let mut best_2d_up: Option<(f64, String, usize)> = None;
    for r in rep.rows.iter().filter(|r| r.inequality == "universal_ratio") {
        let c = r.report.as_ref().unwrap().implied_constant;
        if best.as_ref().is_none_or(|b| c > b.0) {
            best = Some((c, r.domain_id.clone(), r.k, r.n));
        }
        if r.n >= 2 && best_2d_up.as_ref().is_none_or(|b| c > b.0) {
            best_2d_up = Some((c, r.domain_id.clone(), r.k));
        }
    }
    let (c, id, k, n) = best.unwrap();
    let (c2, id2, k2) = best_2d_up.unwrap();
    let ratio = rep.max_consecutive_ratio.as_ref().unwrap();
    outcome(
        c <= 1.0,
        format!(
            "max lambda_(k+1)/(n^4 lambda_k) = {c:.4} at {id} (n = {n}, k = {k}); over n >= 2: {c2:.4} at {id2} k = {k2}; \
             {} rows flagged; max lambda_(k+1)/lambda_k = {:.4} at {} k = {}",
            rep.flags.len(),
            ratio.value,
            ratio.domain_id,
            ratio.k
        ),
    )
}

fn replay() -> Outcome {
    let mut runs = 0;
    let mut card = 0;
    let mut violations = Vec::new();
    for (name, poly) in [
        ("square", ConvexPolygon::unit_square()),
        ("[0,1]x[0,4]", ConvexPolygon::rectangle(1.0, 4.0).unwrap()),
    ] {
        for k in 1..=5 {
            for c in [0.5, 1.0, 2.0] {
                let rep = replay_universal_proof(&poly, k, c, 5).unwrap();
                let json: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
                assert_eq!(json["links"].as_array().unwrap().len(), 7);
                assert!(json["partition"]["cells"].is_array());
                runs += 1;
                if rep.cardinality_holds() {
                    card += 1;
                    for i in 4..=6 {
                        if !rep.link(i).pass {
                            violations.push(format!("{name} k={k} c={c} link {i}"));
                        }
                    }
                }
            }
        }
    }
    outcome(
        runs == 30 && violations.is_empty(),
        format!("{runs} replays, {card} with the cardinality condition, link (4)-(6) violations: {violations:?}"),
    )
}

fn determinism() -> Outcome {
    let runs = sweeps();
    let same = runs.first_csv == runs.second_csv;
    outcome(
        same && !runs.first_csv.is_empty(),
        format!(
            "two bundled-config sweeps: {} CSV bytes, {}",
            runs.first_csv.len(),
            if same { "byte-identical" } else { "differ" }
        ),
    )
}

fn main() {
    let criteria: [(usize, &str, fn() -> Outcome); 11] = [
        (1, "FEM oracle", fem_oracle),
        (2, "box oracle equivalence", box_oracle),
        (3, "Payne-Weinberger", payne_weinberger),
        (4, "partition lower bound", partition_bound),
        (5, "Bishop-Gromov", bishop_gromov),
        (6, "Voronoi/net properties", voronoi_net),
        (7, "Kroger constants", kroger),
        (8, "family bounds cross-check", family_bounds),
        (9, "universal ratio <= 1 on default suite", universal_ratio),
        (10, "proof replay", replay),
        (11, "sweep determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, f) in criteria {
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        println!(
            "criterion {id:>2} {} {name} ({:.1} s): {}",
            if out.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            out.detail
        );
        if !out.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 11 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
