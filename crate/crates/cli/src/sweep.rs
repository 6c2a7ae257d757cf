//! Sweep orchestration: every applicable evaluator on every (domain, k),
//! with per-row error capture and deterministic, config-ordered output.

use std::collections::BTreeMap;
use std::path::Path;

use neumann_core::bounds::{
    self, bishop_gromov_check, borel_family_bound, cgy_bound, kroger_ratio, partition_lower_bound_check,
    payne_weinberger_bound, separated_net_constant, universal_ratio_check, BoundReport, FamilyVariant,
};
use neumann_core::boxspec::{box_diameter_volume, box_spectrum, BoxDomain};
use neumann_core::fem::{neumann_spectrum, Spectrum};
use neumann_core::geometry::{ConvexPolygon, Point, SubsetRegion};
use neumann_core::partition::{farthest_point_centers, voronoi_partition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::domains::{expand_all, Domain, Instance};
use crate::CliError;

pub const CSV_HEADER: [&str; 8] = ["inequality", "domain_id", "n", "k", "lhs", "rhs_core", "implied_constant", "pass"];

/// One evaluator on one (domain, k). Exactly one of `report` and `error` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub inequality: String,
    pub domain_id: String,
    pub n: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<BoundReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Row {
    pub fn failed(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.pass == Some(false))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub domain_id: String,
    pub k: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub rows: usize,
    pub errors: usize,
    pub passed: usize,
    pub failed: usize,
    pub min_implied_constant: Option<f64>,
    pub max_implied_constant: Option<f64>,
    pub mean_implied_constant: Option<f64>,
    pub argmax: Option<Location>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub schema_version: u32,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub provenance: Provenance,
    pub domains: Vec<String>,
    pub aggregates: BTreeMap<String, Aggregate>,
    /// Largest `lambda_{k+1} / lambda_k` seen; evidence only, no claim.
    pub max_consecutive_ratio: Option<Location>,
    /// Rows whose `lambda_{k+1} / (n^4 lambda_k)` exceeds 1.
    pub flags: Vec<String>,
    pub rows: Vec<Row>,
}

impl SweepReport {
    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(Row::failed)
    }

    pub fn any_errors(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }

    /// 1 if a proven check failed, 3 if some row errored, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.any_failed() {
            1
        } else if self.any_errors() {
            3
        } else {
            0
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for row in &self.rows {
            let (lhs, rhs, c, pass) = match (&row.report, &row.error) {
                (Some(r), _) => (
                    fmt_f64(r.lhs),
                    fmt_f64(r.rhs_core),
                    fmt_f64(r.implied_constant),
                    r.pass.map_or(String::new(), |p| p.to_string()),
                ),
                _ => (String::new(), String::new(), String::new(), "error".to_string()),
            };
            w.write_record([
                row.inequality.as_str(),
                row.domain_id.as_str(),
                &row.n.to_string(),
                &row.k.to_string(),
                &lhs,
                &rhs,
                &c,
                &pass,
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep report serializes")
    }
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct Ctx<'a> {
    id: &'a str,
    n: usize,
    rows: Vec<Row>,
}

impl Ctx<'_> {
    fn push<E: ToString>(&mut self, inequality: &str, k: usize, r: Result<BoundReport, E>) {
        let (report, error) = match r {
            Ok(rep) => (Some(rep), None),
            Err(e) => (None, Some(e.to_string())),
        };
        self.rows.push(Row {
            inequality: inequality.to_string(),
            domain_id: self.id.to_string(),
            n: self.n,
            k,
            report,
            error,
        });
    }

    fn spectral_rows(&mut self, spec: &Spectrum, diam: f64, k: usize, table: &[BoundReport]) {
        self.push("payne_weinberger", k, payne_weinberger_bound(spec, diam));
        self.push("kroger", k, kroger_ratio(spec, diam, k));
        self.push("universal_ratio", k, universal_ratio_check(spec, k));
        for r in table.iter().filter(|r| r.inputs.k == Some(k)) {
            self.push::<String>(&r.name, k, Ok(r.clone()));
        }
    }
}

/// Per-instance seed for Monte Carlo draws.
fn instance_seed(base: u64, index: usize, k: usize) -> u64 {
    base.wrapping_add((index as u64) << 20).wrapping_add(k as u64)
}

fn lowest_vertex(poly: &ConvexPolygon) -> Point {
    *poly
        .vertices()
        .iter()
        .min_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)))
        .expect("polygon has vertices")
}

fn min_separation(points: &[Point]) -> f64 {
    let mut d = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d = d.min(points[i].dist(points[j]));
        }
    }
    d
}

/// `k + 1` balls of radius `sep / 4` around farthest-point centers.
fn net_ball_family(poly: &ConvexPolygon, centers: &[Point]) -> neumann_core::Result<Vec<SubsetRegion>> {
    let rad = min_separation(centers) / 4.0;
    centers.iter().map(|c| SubsetRegion::ball(*c, rad, poly)).collect()
}

/// Homothetic copies `c + t (P - c)` with `t = min(1/4, sep / (4 Diam))`,
/// so copies stay at least `sep / 2` apart.
fn homothetic_family(poly: &ConvexPolygon, centers: &[Point]) -> neumann_core::Result<Vec<SubsetRegion>> {
    let t = (min_separation(centers) / (4.0 * poly.diameter())).min(0.25);
    centers
        .iter()
        .map(|c| poly.homothety(*c, t).map(SubsetRegion::polygon))
        .collect()
}

fn bishop_gromov_instance(
    poly: &ConvexPolygon,
    diam: f64,
    samples: usize,
    seed: u64,
) -> neumann_core::Result<BoundReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = poly.bounding_box();
    let x = loop {
        let p = Point::new(
            lo.x + rng.random::<f64>() * (hi.x - lo.x),
            lo.y + rng.random::<f64>() * (hi.y - lo.y),
        );
        if poly.contains(p) {
            break p;
        }
    };
    let big_r = diam * (0.05 + 0.95 * rng.random::<f64>());
    let r = big_r * (0.1 + 0.8 * rng.random::<f64>());
    bishop_gromov_check(poly, x, r, big_r, samples, seed)
}

fn polygon_rows(cfg: &ExperimentConfig, index: usize, id: &str, poly: &ConvexPolygon) -> Vec<Row> {
    let mut ctx = Ctx { id, n: 2, rows: Vec::new() };
    let k_max = cfg.polygon_k.max;
    let spec = match neumann_spectrum(poly, k_max + 1, cfg.fem_levels) {
        Ok(s) => s,
        Err(e) => {
            ctx.push("spectrum", 0, Err(e));
            return ctx.rows;
        }
    };
    let diam = poly.diameter();
    let area = poly.area();
    let table = bounds::ratio_table(&spec, k_max).unwrap_or_default();
    let centers = farthest_point_centers(poly, k_max + 1, lowest_vertex(poly), cfg.grid_resolution);

    let centers = centers.map_err(|e| e.to_string());

    for k in cfg.polygon_k.iter() {
        ctx.spectral_rows(&spec, diam, k, &table);
        let lk = spec.lambda(k).map_err(|e| e.to_string());
        let prefix = centers.as_ref().map(|c| &c[..k + 1]).map_err(Clone::clone);

        ctx.push(
            "separated_net",
            k,
            prefix.clone().and_then(|c| {
                separated_net_constant(min_separation(c), lk.clone()?, 2).map_err(|e| e.to_string())
            }),
        );

        type Builder = fn(&ConvexPolygon, &[Point]) -> neumann_core::Result<Vec<SubsetRegion>>;
        let builders: [(&str, Builder); 2] = [("net_balls", net_ball_family), ("homothetic", homothetic_family)];
        for (fam_name, build) in builders {
            let fam = prefix.clone().and_then(|c| build(poly, c).map_err(|e| e.to_string()));
            let with = |f: &dyn Fn(f64, &[SubsetRegion]) -> neumann_core::Result<BoundReport>| {
                f(lk.clone()?, fam.as_ref().map_err(Clone::clone)?).map_err(|e| e.to_string())
            };
            ctx.push(&format!("cgy/{fam_name}"), k, with(&|l, f| cgy_bound(l, f, area, k)));
            ctx.push(
                &format!("borel_family/{fam_name}"),
                k,
                with(&|l, f| borel_family_bound(l, f, area, k, 2, FamilyVariant::Full)),
            );
            if k >= 2 {
                ctx.push(
                    &format!("borel_family_reduced/{fam_name}"),
                    k,
                    with(&|l, f| borel_family_bound(l, &f[..k], area, k, 2, FamilyVariant::Reduced)),
                );
            }
        }

        ctx.push(
            "bishop_gromov",
            k,
            bishop_gromov_instance(poly, diam, cfg.monte_carlo.samples, instance_seed(cfg.monte_carlo.seed, index, k)),
        );

        let partition = prefix.clone().and_then(|c| {
            let run = || {
                let vor = voronoi_partition(poly, c)?;
                let cells: Vec<Spectrum> = vor
                    .cells
                    .par_iter()
                    .map(|cell| neumann_spectrum(cell, 1, cfg.fem_levels))
                    .collect::<neumann_core::Result<_>>()?;
                partition_lower_bound_check(&spec, &cells, k)
            };
            run().map_err(|e| e.to_string())
        });
        ctx.push("partition_lower_bound", k, partition);
    }
    ctx.rows
}

fn box_rows(cfg: &ExperimentConfig, id: &str, b: &BoxDomain) -> Vec<Row> {
    let mut ctx = Ctx { id, n: b.dim(), rows: Vec::new() };
    let k_max = cfg.box_k.max;
    let spec = match box_spectrum(b, k_max + 1) {
        Ok(s) => s,
        Err(e) => {
            ctx.push("spectrum", 0, Err(e));
            return ctx.rows;
        }
    };
    let (diam, _) = box_diameter_volume(b);
    let table = bounds::ratio_table(&spec, k_max).unwrap_or_default();
    for k in cfg.box_k.iter() {
        ctx.spectral_rows(&spec, diam, k, &table);
    }
    ctx.rows
}

fn instance_rows(cfg: &ExperimentConfig, index: usize, inst: &Instance) -> Vec<Row> {
    match &inst.domain {
        Domain::Polygon(p) => polygon_rows(cfg, index, &inst.id, p),
        Domain::Box(b) => box_rows(cfg, &inst.id, b),
    }
}

fn aggregate(rows: &[Row]) -> BTreeMap<String, Aggregate> {
    let mut out: BTreeMap<String, Aggregate> = BTreeMap::new();
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for row in rows {
        let a = out.entry(row.inequality.clone()).or_insert(Aggregate {
            rows: 0,
            errors: 0,
            passed: 0,
            failed: 0,
            min_implied_constant: None,
            max_implied_constant: None,
            mean_implied_constant: None,
            argmax: None,
        });
        a.rows += 1;
        let Some(rep) = &row.report else {
            a.errors += 1;
            continue;
        };
        match rep.pass {
            Some(true) => a.passed += 1,
            Some(false) => a.failed += 1,
            None => {}
        }
        let c = rep.implied_constant;
        a.min_implied_constant = Some(a.min_implied_constant.map_or(c, |m| m.min(c)));
        if a.max_implied_constant.is_none_or(|m| c > m) {
            a.max_implied_constant = Some(c);
            a.argmax = Some(Location {
                domain_id: row.domain_id.clone(),
                k: row.k,
                value: c,
            });
        }
        let s = sums.entry(row.inequality.clone()).or_insert((0.0, 0));
        s.0 += c;
        s.1 += 1;
    }
    for (name, (sum, count)) in sums {
        if let Some(a) = out.get_mut(&name) {
            a.mean_implied_constant = Some(sum / count as f64);
        }
    }
    out
}

/// Runs the sweep on a pool of `jobs` threads (`0` = rayon default).
/// Results are merged in config order.
pub fn run_sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<SweepReport, CliError> {
    cfg.validate()?;
    let instances = expand_all(&cfg.domains)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
    let per_instance: Vec<Vec<Row>> = pool.install(|| {
        instances
            .par_iter()
            .enumerate()
            .map(|(i, inst)| instance_rows(cfg, i, inst))
            .collect()
    });
    let rows: Vec<Row> = per_instance.into_iter().flatten().collect();

    let mut max_ratio: Option<Location> = None;
    let mut flags = Vec::new();
    for row in rows.iter().filter(|r| r.inequality == "universal_ratio") {
        let Some(rep) = &row.report else { continue };
        let ratio = rep.extras.get("ratio").copied().unwrap_or(f64::NAN);
        if max_ratio.as_ref().is_none_or(|m| ratio > m.value) {
            max_ratio = Some(Location {
                domain_id: row.domain_id.clone(),
                k: row.k,
                value: ratio,
            });
        }
        if rep.implied_constant > 1.0 {
            flags.push(format!(
                "{} k={}: lambda_(k+1) / (n^4 lambda_k) = {} > 1",
                row.domain_id,
                row.k,
                fmt_f64(rep.implied_constant)
            ));
        }
    }

    Ok(SweepReport {
        provenance: Provenance {
            config_sha256: cfg.hash(),
            schema_version: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        domains: instances.into_iter().map(|i| i.id).collect(),
        aggregates: aggregate(&rows),
        max_consecutive_ratio: max_ratio,
        flags,
        rows,
    })
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    use std::io::Write;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::Io(e.to_string()))?;
    tmp.write_all(contents.as_bytes())
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| CliError::Io(e.to_string()))?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

/// Writes the CSV and JSON outputs under `out_dir`; returns their paths.
pub fn write_outputs(
    report: &SweepReport,
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(std::path::PathBuf, std::path::PathBuf), CliError> {
    let csv_path = out_dir.join(&cfg.output.csv);
    let json_path = out_dir.join(&cfg.output.json);
    write_atomic(&csv_path, &report.to_csv())?;
    write_atomic(&json_path, &report.to_json())?;
    Ok((csv_path, json_path))
}
