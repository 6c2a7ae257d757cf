//! Inequality evaluators. Each returns a [`BoundReport`] whose
//! `implied_constant = lhs / rhs_core` is the smallest constant that makes
//! `lhs <= c * rhs_core` true on the given instance.
//!
//! Proven lower bounds (Payne-Weinberger, the partition bound, the
//! Bishop-Gromov volume ratio) carry a pass/fail verdict. Upper bounds with
//! unspecified universal constants only report the constant.
//!
//! All logarithms are natural.

pub mod replay;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::Spectrum;
use crate::geometry::{self, ConvexPolygon, Point, SubsetRegion};
use crate::partition::family_separation;

pub use replay::{replay_universal_proof, ReplayLink, ReplayReport};

/// Where the numbers of a report came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsets: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub lhs: f64,
    pub rhs_core: f64,
    pub implied_constant: f64,
    /// `Some` for proven inequalities, `None` for report-only upper bounds.
    pub pass: Option<bool>,
    pub inputs: Provenance,
    /// Auxiliary named quantities (standard errors, tolerances, scales).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn new(name: &str, lhs: f64, rhs_core: f64, inputs: Provenance) -> Result<Self> {
        if !(rhs_core > 0.0) || !rhs_core.is_finite() {
            return Err(Error::Input(format!("{name}: rhs_core must be positive, got {rhs_core}")));
        }
        Ok(BoundReport {
            name: name.to_string(),
            lhs,
            rhs_core,
            implied_constant: lhs / rhs_core,
            pass: None,
            inputs,
            extras: BTreeMap::new(),
            notes: Vec::new(),
        })
    }

    fn with_pass(mut self, pass: bool) -> Self {
        self.pass = Some(pass);
        self
    }

    fn extra(mut self, key: &str, value: f64) -> Self {
        self.extras.insert(key.to_string(), value);
        self
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// `true` unless this is a proven inequality that failed.
    pub fn ok(&self) -> bool {
        self.pass != Some(false)
    }
}

fn provenance(spec: &Spectrum, k: Option<usize>) -> Provenance {
    Provenance {
        domain: Some(spec.domain.clone()),
        k,
        n: spec.n,
        ..Provenance::default()
    }
}

/// `lambda_1 >= pi^2 / Diam^2`. `lhs` is the bound, `rhs_core` is `lambda_1`.
pub fn payne_weinberger_bound(spec: &Spectrum, diam: f64) -> Result<BoundReport> {
    if !(diam > 0.0) {
        return Err(Error::precondition(format!("diameter must be positive, got {diam}")));
    }
    let l1 = spec.lambda(1)?;
    let bound = PI * PI / (diam * diam);
    let tol = spec.rel_tol(1);
    let pass = bound <= l1 * (1.0 + 2.0 * tol);
    Ok(BoundReport::new("payne_weinberger", bound, l1, provenance(spec, Some(1)))?
        .with_pass(pass)
        .extra("diameter", diam)
        .extra("fem_tol", tol))
}

/// `lambda_k <~ n^2 k^2 / Diam^2`.
pub fn kroger_ratio(spec: &Spectrum, diam: f64, k: usize) -> Result<BoundReport> {
    if k == 0 {
        return Err(Error::precondition("k must be at least 1"));
    }
    let lk = spec.lambda(k)?;
    let n = spec.n as f64;
    let kf = k as f64;
    BoundReport::new("kroger", lk, n * n * kf * kf / (diam * diam), provenance(spec, Some(k)))
        .map(|r| r.extra("diameter", diam))
}

/// `lambda_{l+1}(Omega) >= min_a lambda_1(Omega_a)` for a partition into
/// `l + 1` cells. `lhs` is the cell minimum, `rhs_core` the parent value.
pub fn partition_lower_bound_check(
    parent: &Spectrum,
    cell_spectra: &[Spectrum],
    l: usize,
) -> Result<BoundReport> {
    if cell_spectra.len() != l + 1 {
        return Err(Error::Input(format!(
            "partition into {} cells needs {} cell spectra, got {}",
            l + 1,
            l + 1,
            cell_spectra.len()
        )));
    }
    let mut min_cell = f64::INFINITY;
    let mut tol = parent.rel_tol(l + 1);
    for (i, s) in cell_spectra.iter().enumerate() {
        let l1 = s
            .lambda(1)
            .map_err(|_| Error::Input(format!("cell {i} spectrum is missing lambda_1")))?;
        min_cell = min_cell.min(l1);
        tol = tol.max(s.rel_tol(1));
    }
    let parent_val = parent.lambda(l + 1)?;
    let pass = parent_val >= min_cell * (1.0 - 2.0 * tol);
    let mut inputs = provenance(parent, Some(l + 1));
    inputs.subsets = Some(l + 1);
    Ok(BoundReport::new("partition_lower_bound", min_cell, parent_val, inputs)?
        .with_pass(pass)
        .extra("fem_tol", tol))
}

/// Shared pieces of the family bounds: separation and `max_a ln(vol/vol_a)`.
fn family_terms(family: &[SubsetRegion], vol_domain: f64) -> Result<(f64, f64)> {
    let d = family_separation(family)?;
    if !(d > 0.0) {
        return Err(Error::DegenerateFamily(format!(
            "family of {} subsets has zero separation",
            family.len()
        )));
    }
    let mut max_log = 0.0f64;
    for (i, a) in family.iter().enumerate() {
        let va = a.area()?;
        if !(va > 0.0) {
            return Err(Error::DegenerateFamily(format!("subset {i} has zero area")));
        }
        max_log = max_log.max((vol_domain / va).ln());
    }
    if !(max_log > 0.0) {
        return Err(Error::DegenerateFamily("every subset fills the domain".into()));
    }
    Ok((d, max_log))
}

/// Chung-Grigor'yan-Yau: `lambda_k <~ D^-2 max_a ln(vol / vol_a)^2`.
pub fn cgy_bound(lambda_k: f64, family: &[SubsetRegion], vol_domain: f64, k: usize) -> Result<BoundReport> {
    if family.len() != k + 1 {
        return Err(Error::precondition(format!(
            "bound for lambda_{k} needs {} subsets, got {}",
            k + 1,
            family.len()
        )));
    }
    let (d, max_log) = family_terms(family, vol_domain)?;
    let inputs = Provenance {
        k: Some(k),
        n: 2,
        subsets: Some(family.len()),
        ..Provenance::default()
    };
    Ok(BoundReport::new("cgy", lambda_k, max_log * max_log / (d * d), inputs)?
        .extra("separation", d)
        .extra("max_log_volume_ratio", max_log))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyVariant {
    /// `k + 1` subsets bound `lambda_k`.
    Full,
    /// `k` subsets bound `lambda_k`.
    Reduced,
}

/// `lambda_k <~ n^2 / (D ln(k+1))^2 * max_a ln(vol / vol_a)^2`.
///
/// Also records `r0 = D sqrt(lambda_k) / n`, the separation scale the
/// family has to beat for the bound to bite.
pub fn borel_family_bound(
    lambda_k: f64,
    family: &[SubsetRegion],
    vol_domain: f64,
    k: usize,
    n: usize,
    variant: FamilyVariant,
) -> Result<BoundReport> {
    if k == 0 {
        return Err(Error::precondition("k must be at least 1"));
    }
    let want = match variant {
        FamilyVariant::Full => k + 1,
        FamilyVariant::Reduced => k,
    };
    if family.len() != want {
        return Err(Error::precondition(format!(
            "{variant:?} variant for lambda_{k} needs {want} subsets, got {}",
            family.len()
        )));
    }
    if family.len() < 2 {
        return Err(Error::precondition("family separation needs at least 2 subsets"));
    }
    let (d, max_log) = family_terms(family, vol_domain)?;
    let nf = n as f64;
    let log_k = ((k + 1) as f64).ln();
    let rhs = nf * nf * max_log * max_log / (d * log_k).powi(2);
    let name = match variant {
        FamilyVariant::Full => "borel_family",
        FamilyVariant::Reduced => "borel_family_reduced",
    };
    let inputs = Provenance {
        k: Some(k),
        n,
        subsets: Some(family.len()),
        ..Provenance::default()
    };
    Ok(BoundReport::new(name, lambda_k, rhs, inputs)?
        .extra("separation", d)
        .extra("max_log_volume_ratio", max_log)
        .extra("r0_scale", d * lambda_k.sqrt() / nf))
}

/// `r <~ n / sqrt(lambda_l)` for `l + 1` points that are `r`-separated.
pub fn separated_net_constant(r: f64, lambda_l: f64, n: usize) -> Result<BoundReport> {
    if !(r > 0.0) || !(lambda_l > 0.0) {
        return Err(Error::precondition("need r > 0 and lambda_l > 0"));
    }
    let inputs = Provenance {
        n,
        ..Provenance::default()
    };
    BoundReport::new("separated_net", r, n as f64 / lambda_l.sqrt(), inputs)
}

/// `vol(B(x,r) ∩ P) / vol(B(x,R) ∩ P) >= (r/R)^2`, estimated by Monte Carlo.
///
/// Both areas use the same unit-disk sample set scaled to `r` and `R`, so
/// the estimator inherits the pointwise ordering of the two indicators.
/// The standard error comes from the delta method with the sample covariance.
pub fn bishop_gromov_check(
    poly: &ConvexPolygon,
    x: Point,
    r: f64,
    big_r: f64,
    samples: usize,
    seed: u64,
) -> Result<BoundReport> {
    if !(big_r > r) || !(r > 0.0) {
        return Err(Error::precondition(format!("need R > r > 0, got r = {r}, R = {big_r}")));
    }
    geometry::check_ball_inputs(poly, x, r, samples)?;
    let disk = geometry::unit_disk_samples(samples, seed);
    let (mut s_small, mut s_big, mut s_both) = (0usize, 0usize, 0usize);
    for u in &disk {
        let a = poly.contains(x.add(u.scale(r)));
        let b = poly.contains(x.add(u.scale(big_r)));
        s_small += a as usize;
        s_big += b as usize;
        s_both += (a && b) as usize;
    }
    let nf = samples as f64;
    let (fa, fb) = (s_small as f64 / nf, s_big as f64 / nf);
    let cov = s_both as f64 / nf - fa * fb;
    let scale = (r / big_r).powi(2);
    let ratio = scale * fa / fb;
    let rel_var = (fa * (1.0 - fa) / (fa * fa) + fb * (1.0 - fb) / (fb * fb) - 2.0 * cov / (fa * fb)) / nf;
    let sigma = ratio * rel_var.max(0.0).sqrt();
    let pass = ratio >= scale - 3.0 * sigma;
    let inputs = Provenance {
        n: 2,
        seed: Some(seed),
        ..Provenance::default()
    };
    Ok(BoundReport::new("bishop_gromov", ratio, scale, inputs)?
        .with_pass(pass)
        .extra("std_error", sigma)
        .extra("r", r)
        .extra("R", big_r)
        .extra("samples", nf))
}

/// `lambda_{k+1} <~ n^4 lambda_k`.
pub fn universal_ratio_check(spec: &Spectrum, k: usize) -> Result<BoundReport> {
    if k == 0 {
        return Err(Error::precondition("k must be at least 1"));
    }
    let lk = spec.lambda(k)?;
    let lk1 = spec.lambda(k + 1)?;
    if lk <= spec.tol_zero() {
        return Err(Error::Index(format!("lambda_{k} = {lk:e} is not positive")));
    }
    let n4 = (spec.n as f64).powi(4);
    BoundReport::new("universal_ratio", lk1, n4 * lk, provenance(spec, Some(k)))
        .map(|r| r.extra("ratio", lk1 / lk))
}

/// Diagnostic ratios for `k = 1..=k_max`:
///
/// - `liu`: `lambda_k / (k^2 lambda_1)`
/// - `f1_log`: `lambda_{k+1} / ((n ln k)^2 lambda_k)`, only for `k >= 2`
/// - `weyl_lower`: `lambda_k / (k^(2/n) lambda_1)`, a lower-bound constant
/// - `ratio_power`: `lambda_{k+1} / (k^(2-2/n) lambda_k)`
pub fn ratio_table(spec: &Spectrum, k_max: usize) -> Result<Vec<BoundReport>> {
    spec.lambda(k_max + 1)?;
    let l1 = spec.lambda(1)?;
    let n = spec.n as f64;
    let mut rows = Vec::with_capacity(4 * k_max);
    for k in 1..=k_max {
        let kf = k as f64;
        let lk = spec.lambda(k)?;
        let lk1 = spec.lambda(k + 1)?;
        let p = provenance(spec, Some(k));
        rows.push(BoundReport::new("liu", lk, kf * kf * l1, p.clone())?);
        if k >= 2 {
            let log = n * kf.ln();
            rows.push(BoundReport::new("f1_log", lk1, log * log * lk, p.clone())?);
        }
        rows.push(
            BoundReport::new("weyl_lower", lk, kf.powf(2.0 / n) * l1, p.clone())?
                .note("lower bound: constant should stay above a positive floor"),
        );
        rows.push(BoundReport::new("ratio_power", lk1, kf.powf(2.0 - 2.0 / n) * lk, p)?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxspec::{box_spectrum, BoxDomain};
    use approx::assert_relative_eq;

    const PI2: f64 = PI * PI;

    fn square_spectrum() -> Spectrum {
        box_spectrum(&BoxDomain::new(vec![1.0, 1.0]).unwrap(), 8).unwrap()
    }

    fn corner_squares() -> Vec<SubsetRegion> {
        let a = ConvexPolygon::rectangle(0.25, 0.25).unwrap();
        vec![
            SubsetRegion::polygon(a.clone()),
            SubsetRegion::polygon(a.translate(Point::new(0.75, 0.75))),
        ]
    }

    #[test]
    fn payne_weinberger_square() {
        let r = payne_weinberger_bound(&square_spectrum(), 2f64.sqrt()).unwrap();
        assert_relative_eq!(r.lhs, PI2 / 2.0, max_relative = 1e-14);
        assert_relative_eq!(r.implied_constant, 0.5, max_relative = 1e-14);
        assert_eq!(r.pass, Some(true));
    }

    #[test]
    fn payne_weinberger_thin_rectangle_is_near_sharp() {
        let eps: f64 = 0.05;
        let s = box_spectrum(&BoxDomain::new(vec![1.0, eps]).unwrap(), 2).unwrap();
        let r = payne_weinberger_bound(&s, (1.0 + eps * eps).sqrt()).unwrap();
        assert_relative_eq!(r.implied_constant, 1.0 / (1.0 + eps * eps), max_relative = 1e-14);
    }

    #[test]
    fn kroger_closed_forms() {
        let r = kroger_ratio(&square_spectrum(), 2f64.sqrt(), 1).unwrap();
        assert_relative_eq!(r.implied_constant, PI2 * 2.0 / 4.0, max_relative = 1e-14);
        let interval = box_spectrum(&BoxDomain::new(vec![1.0]).unwrap(), 30).unwrap();
        for k in 1..=30 {
            let r = kroger_ratio(&interval, 1.0, k).unwrap();
            assert_relative_eq!(r.implied_constant, PI2, max_relative = 1e-14);
        }
    }

    #[test]
    fn cgy_and_borel_corner_squares() {
        let fam = corner_squares();
        let cgy = cgy_bound(PI2, &fam, 1.0, 1).unwrap();
        let ln16 = 16f64.ln();
        assert_relative_eq!(cgy.rhs_core, ln16 * ln16 / 0.5, max_relative = 1e-12);
        assert_relative_eq!(cgy.rhs_core, 15.376, epsilon = 2e-3);
        assert_relative_eq!(cgy.implied_constant, 0.6419, epsilon = 1e-4);
        let full = borel_family_bound(PI2, &fam, 1.0, 1, 2, FamilyVariant::Full).unwrap();
        assert_relative_eq!(full.rhs_core, 128.0, epsilon = 0.05);
        assert_relative_eq!(full.implied_constant, 0.0771, epsilon = 1e-4);
        let ratio = full.rhs_core / cgy.rhs_core;
        assert_relative_eq!(ratio, 4.0 / 2f64.ln().powi(2), max_relative = 1e-12);
        assert_relative_eq!(ratio, 8.325, epsilon = 1e-3);
    }

    #[test]
    fn family_errors() {
        let sq = ConvexPolygon::unit_square();
        let halves = vec![
            SubsetRegion::polygon(ConvexPolygon::rectangle(0.5, 1.0).unwrap()),
            SubsetRegion::polygon(ConvexPolygon::rectangle(0.5, 1.0).unwrap().translate(Point::new(0.5, 0.0))),
        ];
        assert!(matches!(cgy_bound(PI2, &halves, sq.area(), 1), Err(Error::DegenerateFamily(_))));
        let fam = corner_squares();
        assert!(cgy_bound(PI2, &fam, 1.0, 2).is_err());
        assert!(borel_family_bound(PI2, &fam, 1.0, 2, 2, FamilyVariant::Full).is_err());
        assert!(borel_family_bound(PI2, &fam, 1.0, 2, 2, FamilyVariant::Reduced).is_ok());
        assert!(borel_family_bound(PI2, &fam, 1.0, 1, 2, FamilyVariant::Reduced).is_err());
    }

    #[test]
    fn separated_net_closed_forms() {
        let r = separated_net_constant(2f64.sqrt(), PI2, 2).unwrap();
        assert_relative_eq!(r.implied_constant, 2f64.sqrt() * PI / 2.0, max_relative = 1e-14);
        let r = separated_net_constant(1.0, PI2, 1).unwrap();
        assert_relative_eq!(r.implied_constant, PI, max_relative = 1e-14);
    }

    #[test]
    fn bishop_gromov_equality_cases() {
        let sq = ConvexPolygon::unit_square();
        let r = bishop_gromov_check(&sq, Point::new(0.5, 0.5), 0.1, 0.3, 10_000, 1).unwrap();
        assert_relative_eq!(r.lhs, 1.0 / 9.0, max_relative = 1e-14);
        assert_eq!(r.pass, Some(true));
        let r = bishop_gromov_check(&sq, Point::new(0.0, 0.0), 0.1, 0.2, 10_000, 2).unwrap();
        assert_relative_eq!(r.lhs, 0.25, max_relative = 1e-12);
        assert_eq!(r.pass, Some(true));
        assert!(bishop_gromov_check(&sq, Point::new(0.5, 0.5), 0.3, 0.1, 10_000, 1).is_err());
        assert!(bishop_gromov_check(&sq, Point::new(1.5, 0.5), 0.1, 0.3, 10_000, 1).is_err());
    }

    #[test]
    fn universal_ratio_closed_forms() {
        let b = box_spectrum(&BoxDomain::new(vec![1.0, 2.0]).unwrap(), 3).unwrap();
        assert_relative_eq!(universal_ratio_check(&b, 1).unwrap().implied_constant, 0.25, max_relative = 1e-14);
        assert_relative_eq!(
            universal_ratio_check(&square_spectrum(), 1).unwrap().implied_constant,
            1.0 / 16.0,
            max_relative = 1e-14
        );
        let interval = box_spectrum(&BoxDomain::new(vec![1.0]).unwrap(), 21).unwrap();
        for k in 1..=20 {
            let c = universal_ratio_check(&interval, k).unwrap().implied_constant;
            let kf = k as f64;
            assert_relative_eq!(c, ((kf + 1.0) / kf).powi(2), max_relative = 1e-13);
            assert!(c <= 4.0 + 1e-12);
        }
        assert!(universal_ratio_check(&interval, 21).is_err());
    }

    #[test]
    fn ratio_table_rows() {
        let interval = box_spectrum(&BoxDomain::new(vec![1.0]).unwrap(), 11).unwrap();
        let rows = ratio_table(&interval, 10).unwrap();
        for r in rows.iter().filter(|r| r.name == "liu") {
            assert_relative_eq!(r.implied_constant, 1.0, max_relative = 1e-13);
        }
        let sq = ratio_table(&square_spectrum(), 3).unwrap();
        let liu3 = sq.iter().find(|r| r.name == "liu" && r.inputs.k == Some(3)).unwrap();
        assert_relative_eq!(liu3.implied_constant, 2.0 / 9.0, max_relative = 1e-14);
        assert!(!sq.iter().any(|r| r.name == "f1_log" && r.inputs.k == Some(1)));
        assert_eq!(sq.iter().filter(|r| r.inputs.k == Some(1)).count(), 3);
        assert_eq!(sq.iter().filter(|r| r.inputs.k == Some(2)).count(), 4);
    }

    #[test]
    fn report_identity() {
        assert!(BoundReport::new("x", 1.0, 0.0, Provenance::default()).is_err());
        let r = BoundReport::new("x", 3.0, 7.0, Provenance::default()).unwrap();
        assert_relative_eq!(r.lhs, r.implied_constant * r.rhs_core, max_relative = 1e-15);
        assert!(r.ok());
    }
}
