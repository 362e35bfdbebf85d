//! Luecking's embedding criterion: `k(w) = μ(D(w,δ)) / λ(D(w,δ))` and its
//! `L^s` norm, `1/s + q/p = 1`.
//!
//! `D(w,δ) = φ_w(sΔ)` with `s = tanh δ`, so `k` is computed by pulling the
//! density back through `φ_w`. Grid points are carried with their defect
//! `1 - |w|^2`, which keeps `k` accurate at hyperbolic distances where `|w|`
//! itself rounds to 1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::{euclidean_from_defect, raw, Point};
use crate::quadrature::{gauss_legendre, build_rule, DiskQuadrature, PanelSpec};
use crate::report::{self, floats, num, text, DiagnosticsReport, ReportKind};
use crate::symbols::Symbol;
use crate::{par, sum};

/// Atoms this close to the boundary of `D(w,δ)` count as inside.
pub const ATOM_TIE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub enum MeasureSpec {
    /// `dμ = f dλ` with `f >= 0`.
    Density(Symbol),
    /// `μ = Σ mass_j δ_{a_j}`.
    Atoms(Vec<(Complex64, f64)>),
}

impl MeasureSpec {
    pub fn density(f: Symbol) -> Self {
        MeasureSpec::Density(f)
    }

    pub fn atoms(atoms: Vec<(Complex64, f64)>) -> Result<Self> {
        for &(a, m) in &atoms {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::param("atoms", format!("mass {m} at {a} must be positive")));
            }
            if a.norm() >= 1.0 {
                return Err(Error::OutsideDisk(a));
            }
        }
        Ok(MeasureSpec::Atoms(atoms))
    }

    pub fn describe(&self) -> String {
        match self {
            MeasureSpec::Density(f) => format!("density {}", f.id()),
            MeasureSpec::Atoms(a) => format!("{} atoms", a.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingQuery {
    pub p: f64,
    pub q: f64,
    pub delta: f64,
}

impl EmbeddingQuery {
    pub fn new(p: f64, q: f64, delta: f64) -> Result<Self> {
        if !(q > 0.0 && q < p && p.is_finite()) {
            return Err(Error::param("q", format!("need 0 < q < p, got p = {p}, q = {q}")));
        }
        check_delta(delta)?;
        Ok(Self { p, q, delta })
    }

    /// `s = 1 / (1 - q/p)`.
    pub fn s(&self) -> f64 {
        1.0 / (1.0 - self.q / self.p)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 0.5 {
        Ok(())
    } else {
        Err(Error::param("delta", format!("must lie in (0, 1/2), got {delta}")))
    }
}

fn density_at(f: &Symbol, p: &Point) -> Result<f64> {
    let v = f.eval(p)?;
    if !(v.re >= 0.0) || v.im.abs() > 1e-12 * v.re.abs().max(1.0) {
        return Err(Error::param(
            "density",
            format!("must be real and nonnegative; {} at w = {}", v, p.w),
        ));
    }
    Ok(v.re)
}

/// `k(w)` with `w` given as a [`Point`] (value and defect).
///
/// For a density, `k(w) = (1 - s^2|w|^2)^2 ∫ f(φ_w(sξ)) |1 - s w̄ ξ|^(-4) dλ(ξ)`,
/// which is `μ(φ_w(sΔ)) / R^2` after the change of variables.
pub fn k_function(mu: &MeasureSpec, w: &Point, delta: f64, local: &DiskQuadrature) -> Result<f64> {
    check_delta(delta)?;
    let s = delta.tanh();
    let s2 = s * s;
    let disk = euclidean_from_defect(w.w, w.defect, s);
    match mu {
        MeasureSpec::Density(f) => {
            let scale = (1.0 - s2) + s2 * w.defect;
            let mut acc = sum::Compensated::default();
            for (xi, weight) in local.nodes() {
                let zeta = Point {
                    w: xi.w * s,
                    defect: 1.0 - s2 * xi.norm_sqr(),
                };
                let image = raw::mobius_point(w.w, w.defect, &zeta);
                let d = (Complex64::new(1.0, 0.0) - w.w.conj() * zeta.w).norm_sqr();
                let v = density_at(f, &image)? / (d * d);
                if !v.is_finite() {
                    return Err(Error::NonFiniteIntegrand {
                        index: 0,
                        point: image.w,
                        value: Complex64::new(v, 0.0),
                    });
                }
                acc.add(weight * v);
            }
            Ok(scale * scale * acc.value())
        }
        MeasureSpec::Atoms(atoms) => {
            let mass: f64 = atoms
                .iter()
                .filter(|(a, _)| (a - disk.center).norm() < disk.radius + ATOM_TIE)
                .map(|(_, m)| m)
                .sum();
            Ok(mass / (disk.radius * disk.radius))
        }
    }
}

/// `k(w)` by direct quadrature over the Euclidean disk `|v - C| < R`, divided
/// by its normalized area `R^2`. Loses relative accuracy in `1 - |v|^2` near
/// the boundary; kept as an independent cross-check of [`k_function`].
pub fn k_function_euclidean(mu: &MeasureSpec, w: &Point, delta: f64, local: &DiskQuadrature) -> Result<f64> {
    check_delta(delta)?;
    let disk = euclidean_from_defect(w.w, w.defect, delta.tanh());
    match mu {
        MeasureSpec::Density(f) => {
            let mut acc = sum::Compensated::default();
            for (xi, weight) in local.nodes() {
                let v = Point::new(disk.center + xi.w * disk.radius);
                acc.add(weight * density_at(f, &v)?);
            }
            Ok(acc.value())
        }
        MeasureSpec::Atoms(_) => k_function(mu, w, delta, local),
    }
}

/// Grid for `‖k‖_s`: hyperbolic polar coordinates `|w| = tanh ρ`, Gauss
/// nodes on unit panels in `ρ`, uniform angles. Each refinement level
/// extends `ρ` to the next entry of `rho_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingGrid {
    pub rho_max: Vec<f64>,
    pub nodes_per_panel: usize,
    pub angles: usize,
    pub local_radial: usize,
    pub local_angular: usize,
}

impl Default for EmbeddingGrid {
    fn default() -> Self {
        Self {
            rho_max: vec![8.0, 16.0, 32.0],
            nodes_per_panel: 10,
            angles: 32,
            local_radial: 16,
            local_angular: 32,
        }
    }
}

pub const STABLE_CHANGE: f64 = 0.10;
pub const GROWTH_FACTOR: f64 = 2.0;

pub fn embedding_decision(levels: &[f64]) -> &'static str {
    let n = levels.len();
    if n < 3 {
        return "inconclusive";
    }
    let (e0, e1, e2) = (levels[n - 3], levels[n - 2], levels[n - 1]);
    let rel = |a: f64, b: f64| (b - a).abs() / a.abs().max(f64::MIN_POSITIVE);
    if e2 >= GROWTH_FACTOR * e0 {
        "embedding fails"
    } else if rel(e0, e1) <= STABLE_CHANGE && rel(e1, e2) <= STABLE_CHANGE {
        "embedding holds"
    } else {
        "inconclusive"
    }
}

/// `∫ k^s dλ` over `|w| < tanh(rho_max)` together with the per-ring values
/// of `k` at angle 0.
fn k_power_integral(
    mu: &MeasureSpec,
    query: &EmbeddingQuery,
    grid: &EmbeddingGrid,
    rho_max: f64,
    local: &DiskQuadrature,
) -> Result<(f64, Vec<(f64, f64)>)> {
    let (x, wts) = gauss_legendre(grid.nodes_per_panel);
    let panels = rho_max.ceil() as usize;
    let h = rho_max / panels as f64;
    let mut rhos = Vec::with_capacity(panels * x.len());
    for k in 0..panels {
        let a = k as f64 * h;
        for (xi, wi) in x.iter().zip(&wts) {
            rhos.push((a + 0.5 * h * (xi + 1.0), 0.5 * h * wi));
        }
    }
    let s = query.s();
    let angles = grid.angles;
    let rings = par::try_map_slice(&rhos, |&(rho, wr)| -> Result<(f64, f64)> {
        // t = tanh^2 ρ, dt = 2 tanh ρ sech^2 ρ dρ; defect = sech^2 ρ
        let sech2 = 1.0 / (rho.cosh() * rho.cosh());
        let dt = 2.0 * rho.tanh() * sech2 * wr;
        let mut acc = sum::Compensated::default();
        let mut k0 = 0.0;
        for j in 0..angles {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / angles as f64;
            let w = Point::from_defect(sech2, theta);
            let k = k_function(mu, &w, query.delta, local)?;
            if j == 0 {
                k0 = k;
            }
            acc.add(k.powf(s));
        }
        Ok((dt * acc.value() / angles as f64, k0))
    })?;
    let total = sum::sum_real(rings.iter().map(|r| r.0));
    let profile = rhos.iter().zip(&rings).map(|(r, v)| (r.0, v.1)).collect();
    Ok((total, profile))
}

/// Estimates `‖k‖_s` at each refinement level and decides the embedding:
/// "holds" if both successive relative changes are within 10%, "fails" if
/// the estimate at least doubles over the two refinements, otherwise
/// "inconclusive". Only `‖k‖_s` is reported; the constant `c` in
/// `C = c‖k‖_s^(1/q)` is not known.
pub fn embedding_check(mu: &MeasureSpec, query: &EmbeddingQuery, grid: &EmbeddingGrid) -> Result<DiagnosticsReport> {
    let query = EmbeddingQuery::new(query.p, query.q, query.delta)?;
    if grid.rho_max.is_empty() || grid.rho_max.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::param("rho_max", "needs positive entries"));
    }
    if grid.angles == 0 || grid.nodes_per_panel == 0 {
        return Err(Error::param("grid", "sizes must be positive"));
    }
    let local = build_rule(grid.local_radial, grid.local_angular, &PanelSpec::uniform())?;
    let s = query.s();
    let mut rep = DiagnosticsReport::new(ReportKind::Embedding, Some(mu.describe()));
    rep.parameters.insert("p".into(), num(query.p));
    rep.parameters.insert("q".into(), num(query.q));
    rep.parameters.insert("delta".into(), num(query.delta));
    rep.parameters.insert("s".into(), num(s));
    rep.grid.insert("rho_max".into(), floats(&grid.rho_max));
    rep.grid.insert("nodes_per_panel".into(), report::int(grid.nodes_per_panel));
    rep.grid.insert("angles".into(), report::int(grid.angles));
    rep.grid.insert("local_rule".into(), text(local.fingerprint()));

    let mut norms = Vec::with_capacity(grid.rho_max.len());
    for (level, &rho_max) in grid.rho_max.iter().enumerate() {
        let (integral, profile) = k_power_integral(mu, &query, grid, rho_max, &local)?;
        let norm = integral.max(0.0).powf(1.0 / s);
        norms.push(norm);
        rep.values.push(report::row([
            ("series", text("level")),
            ("level", report::int(level)),
            ("rho_max", num(rho_max)),
            ("integral", num(integral)),
            ("norm_s", num(norm)),
        ]));
        if level == 0 {
            for (rho, k) in profile {
                rep.values.push(report::row([
                    ("series", text("k")),
                    ("rho", num(rho)),
                    ("k", num(k)),
                ]));
            }
        }
    }
    let decision = embedding_decision(&norms);
    rep.summary.insert("norm_s".into(), num(*norms.last().unwrap_or(&f64::NAN)));
    rep.summary.insert("norm_s_levels".into(), floats(&norms));
    rep.summary.insert("decision".into(), text(decision));
    rep.summary.insert("verdict".into(), text(decision));
    rep.tolerances.insert("stable_change".into(), num(STABLE_CHANGE));
    rep.tolerances.insert("growth_factor".into(), num(GROWTH_FACTOR));
    rep.tolerances.insert("atom_tie".into(), Value::from(ATOM_TIE));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn local() -> DiskQuadrature {
        build_rule(16, 32, &PanelSpec::uniform()).unwrap()
    }

    #[test]
    fn scaled_lebesgue_gives_constant() {
        let two = MeasureSpec::density(Symbol::parse("2").unwrap());
        for (defect, theta) in [(1.0, 0.0), (0.5, 1.0), (1e-9, 2.0), (1e-30, 3.0)] {
            let w = Point::from_defect(defect, theta);
            let k = k_function(&two, &w, 0.25, &local()).unwrap();
            assert!((k - 2.0).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn routes_agree_inside() {
        let mu = MeasureSpec::density(Symbol::parse("(1-abs(w)^2)^(-0.5)").unwrap());
        let fine = build_rule(32, 64, &PanelSpec::uniform()).unwrap();
        for w in [Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.3)] {
            let p = Point::new(w);
            let a = k_function(&mu, &p, 0.25, &local()).unwrap();
            let b = k_function(&mu, &p, 0.25, &fine).unwrap();
            let c = k_function_euclidean(&mu, &p, 0.25, &fine).unwrap();
            assert!((a - b).abs() < 1e-8 * b);
            assert!((c - b).abs() < 1e-6 * b, "{c} vs {b}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(EmbeddingQuery::new(2.0, 2.0, 0.25).is_err());
        assert!(EmbeddingQuery::new(2.0, 1.0, 0.5).is_err());
        assert!(MeasureSpec::atoms(vec![(Complex64::new(0.0, 0.0), 0.0)]).is_err());
        let neg = MeasureSpec::density(Symbol::parse("-1").unwrap());
        assert!(k_function(&neg, &Point::new(Complex64::new(0.0, 0.0)), 0.25, &local()).is_err());
    }

    #[test]
    fn decisions() {
        assert_eq!(embedding_decision(&[1.0, 1.05, 1.06]), "embedding holds");
        assert_eq!(embedding_decision(&[1.0, 3.0, 9.0]), "embedding fails");
        assert_eq!(embedding_decision(&[1.0, 1.3, 1.5]), "inconclusive");
    }
}
