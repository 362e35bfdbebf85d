//! Boundedness and compactness diagnostics built on finite sections.
//!
//! Grids are finite, so verdicts can only support or contradict the limit
//! statements they probe; reports say so.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    assemble, berezin_from_matrix, berezin_reliable, kernel_coefficients, operator_norm, truncation_deficit,
    truncation_remainder, TailModel, ToeplitzMatrix,
};
use crate::error::{Error, Result};
use crate::geometry::{raw, Point, UnitDiskPoint};
use crate::kernel::berezin_direct;
use crate::quadrature::{build_rule, PanelSpec, QuadratureConfig};
use crate::report::{self, floats, num, text, DiagnosticsReport, ReportKind};
use crate::symbols::Symbol;

/// A profile "increases" when its last value is at least this multiple of
/// the value three radii earlier.
pub const BOUNDEDNESS_GROWTH: f64 = 1.1;
/// Minimum decay factor per step for a compactness-consistent trend.
pub const COMPACTNESS_DECAY: f64 = 2.0;

pub const DEFAULT_RADII: [f64; 7] = [0.0, 0.3, 0.6, 0.8, 0.9, 0.95, 0.99];

fn grid_point(radius: f64, angles: usize, k: usize) -> Result<(f64, UnitDiskPoint)> {
    let theta = 2.0 * PI * k as f64 / angles as f64;
    Ok((theta, UnitDiskPoint::from_polar(radius, theta)?))
}

fn check_grid(radii: &[f64], angles: usize) -> Result<()> {
    if angles == 0 {
        return Err(Error::param("angles", "must be at least 1"));
    }
    if let Some(r) = radii.iter().find(|r| !(0.0..1.0).contains(*r)) {
        return Err(Error::param("radii", format!("radius {r} outside [0, 1)")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSettings {
    pub radii: Vec<f64>,
    pub angles: usize,
    /// Exponent in `[1, 2]`.
    pub q: f64,
    pub quadrature: QuadratureConfig,
}

impl Default for ProfileSettings {
    fn default() -> Self {
        Self {
            radii: DEFAULT_RADII.to_vec(),
            angles: 16,
            q: 2.0,
            quadrature: QuadratureConfig::default(),
        }
    }
}

/// `"boundedness NOT supported: profile increasing"` when the outermost value
/// is at least [`BOUNDEDNESS_GROWTH`] times the value three radii earlier.
pub fn boundedness_verdict(per_radius: &[f64]) -> &'static str {
    let n = per_radius.len();
    if n >= 2 {
        let reference = per_radius[n.saturating_sub(3)];
        if per_radius[n - 1] >= BOUNDEDNESS_GROWTH * reference {
            return "boundedness NOT supported: profile increasing";
        }
    }
    "boundedness supported on this grid (not a proof)"
}

/// `‖T_{f∘φ_z} 1‖_q` on a polar grid, from the section `A` of `T_f`.
///
/// Uses `T_{f∘φ_z} 1 = U_z T_f U_z 1` with `U_z 1 = -k_z`. For `q = 2` this is
/// `‖A c(z)‖`; otherwise `∫ |T_f k_z|^q |k_z|^(2-q) dλ` with `T_f k_z`
/// rebuilt from `A c(z)`. At `q = 2` the profile of `f̄` (`‖A^H c(z)‖`) is
/// reported too.
pub fn invariant_norm_profile(a: &ToeplitzMatrix, settings: &ProfileSettings) -> Result<DiagnosticsReport> {
    let q = settings.q;
    if !(1.0..=2.0).contains(&q) {
        return Err(Error::param("q", format!("must lie in [1, 2], got {q}")));
    }
    check_grid(&settings.radii, settings.angles)?;
    let n = a.order();
    let mut rep = DiagnosticsReport::new(ReportKind::Boundedness, Some(a.symbol_id().to_string()));
    rep.parameters.insert("N".into(), report::int(n));
    rep.parameters.insert("q".into(), num(q));
    rep.grid.insert("radii".into(), floats(&settings.radii));
    rep.grid.insert("angles".into(), report::int(settings.angles));
    rep.grid.insert("rule".into(), text(a.rule_fingerprint()));

    let mut per_radius = Vec::with_capacity(settings.radii.len());
    let mut worst_deficit: f64 = 0.0;
    for &radius in &settings.radii {
        let mut best: f64 = 0.0;
        let rule = if q < 2.0 {
            let na = settings
                .quadrature
                .angular_for_radius(radius)
                .max(n.next_power_of_two());
            Some(build_rule(
                settings.quadrature.n_radial,
                na,
                &PanelSpec::graded(settings.quadrature.graded_panels.max(1)),
            )?)
        } else {
            None
        };
        for k in 0..settings.angles {
            let (theta, z) = grid_point(radius, settings.angles, k)?;
            let c = kernel_coefficients(z, n);
            let deficit = truncation_deficit(z, n);
            worst_deficit = worst_deficit.max(deficit);
            let d = a.apply(&c.coeffs);
            let mut row = report::row([
                ("radius", num(radius)),
                ("theta", num(theta)),
                ("z_re", num(z.value().re)),
                ("z_im", num(z.value().im)),
                ("kernel_deficit", num(deficit)),
            ]);
            let value = match &rule {
                None => {
                    let v = norm2(&d);
                    let adj = norm2(&a.apply_adjoint(&c.coeffs));
                    row.insert("adjoint_norm".into(), num(adj));
                    best = best.max(v.max(adj));
                    v
                }
                Some(rule) => {
                    let series: Vec<Complex64> = d
                        .iter()
                        .enumerate()
                        .map(|(m, x)| x * ((m + 1) as f64).sqrt())
                        .collect();
                    let zv = z.value();
                    let zdef = z.defect();
                    let s = rule.try_integrate_series(&series, |p, f| {
                        let k2 = raw::normalized_kernel_sqr(zv, zdef, p.w);
                        Ok(Complex64::new(f.norm().powf(q) * k2.powf(1.0 - q / 2.0), 0.0))
                    })?;
                    let v = s.re.max(0.0).powf(1.0 / q);
                    best = best.max(v);
                    v
                }
            };
            row.insert("norm".into(), num(value));
            rep.values.push(row);
        }
        per_radius.push(best);
    }
    let sup = per_radius.iter().copied().fold(0.0, f64::max);
    let truncation_warning = worst_deficit > 1e-6;
    if truncation_warning {
        log::warn!(
            "invariant_norm_profile: kernel truncation deficit {worst_deficit:.2e} at the outermost radius; increase N"
        );
    }
    rep.summary.insert("per_radius_max".into(), floats(&per_radius));
    rep.summary.insert("sup".into(), num(sup));
    rep.summary.insert("verdict".into(), text(boundedness_verdict(&per_radius)));
    rep.summary.insert("truncation_warning".into(), Value::Bool(truncation_warning));
    rep.tolerances.insert("growth_factor".into(), num(BOUNDEDNESS_GROWTH));
    rep.tolerances.insert("kernel_deficit_warning".into(), num(1e-6));
    Ok(rep)
}

fn norm2(v: &[Complex64]) -> f64 {
    crate::sum::sum_real(v.iter().map(|x| x.norm_sqr())).sqrt()
}

/// True when every one of the last `min(3, len-1)` steps shrinks by at least
/// [`COMPACTNESS_DECAY`]; exact zeros count as decayed.
fn decays(values: &[f64]) -> bool {
    let n = values.len();
    if n < 2 {
        return false;
    }
    let steps = 3.min(n - 1);
    (n - 1 - steps..n - 1).all(|i| {
        let (a, b) = (values[i].abs(), values[i + 1].abs());
        b == 0.0 || a >= COMPACTNESS_DECAY * b
    })
}

pub fn compactness_verdict(berezin_profile: &[f64], remainder_norms: &[f64]) -> &'static str {
    if decays(berezin_profile) && decays(remainder_norms) {
        "consistent with compactness"
    } else {
        "NOT consistent with compactness"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactnessSettings {
    pub radii: Vec<f64>,
    pub angles: usize,
    pub r_schedule: Vec<f64>,
    pub tail: TailModel,
    pub quadrature: QuadratureConfig,
}

impl Default for CompactnessSettings {
    fn default() -> Self {
        Self {
            radii: DEFAULT_RADII.to_vec(),
            angles: 16,
            r_schedule: vec![0.9, 0.99, 0.999],
            tail: TailModel::default(),
            quadrature: QuadratureConfig::default(),
        }
    }
}

/// Berezin boundary profile and `‖A(I - D_r)‖` along a schedule of `r`.
pub fn compactness_diagnostic(f: &Symbol, n: usize, settings: &CompactnessSettings) -> Result<DiagnosticsReport> {
    check_grid(&settings.radii, settings.angles)?;
    if settings.r_schedule.is_empty() {
        return Err(Error::param("r_schedule", "must not be empty"));
    }
    let rule = settings.quadrature.matrix_rule(f, n)?;
    let a = assemble(f, n, &rule)?;
    let mut rep = DiagnosticsReport::new(ReportKind::Compactness, Some(f.id()));
    rep.parameters.insert("N".into(), report::int(n));
    rep.parameters.insert("r_schedule".into(), floats(&settings.r_schedule));
    rep.parameters.insert("tail".into(), serde_json::to_value(settings.tail).unwrap_or(Value::Null));
    rep.grid.insert("radii".into(), floats(&settings.radii));
    rep.grid.insert("angles".into(), report::int(settings.angles));
    rep.grid.insert("rule".into(), text(rule.fingerprint()));

    let mut berezin_max = Vec::with_capacity(settings.radii.len());
    for &radius in &settings.radii {
        if !berezin_reliable(n, radius) {
            log::info!("compactness_diagnostic: radius {radius} relies on the {:?} tail at N = {n}", settings.tail);
        }
        let mut best: f64 = 0.0;
        for k in 0..settings.angles {
            let (theta, z) = grid_point(radius, settings.angles, k)?;
            let b = berezin_from_matrix(&a, z, settings.tail);
            best = best.max(b.norm());
            rep.values.push(report::row([
                ("series", text("berezin")),
                ("radius", num(radius)),
                ("theta", num(theta)),
                ("re", num(b.re)),
                ("im", num(b.im)),
            ]));
        }
        berezin_max.push(best);
    }
    let mut norms = Vec::with_capacity(settings.r_schedule.len());
    for &r in &settings.r_schedule {
        let v = operator_norm(&truncation_remainder(&a, r)?)?;
        norms.push(v);
        rep.values.push(report::row([
            ("series", text("remainder")),
            ("r", num(r)),
            ("norm", num(v)),
        ]));
    }
    rep.summary.insert("berezin_max_per_radius".into(), floats(&berezin_max));
    rep.summary.insert("remainder_norms".into(), floats(&norms));
    rep.summary.insert("verdict".into(), text(compactness_verdict(&berezin_max, &norms)));
    rep.tolerances.insert("decay_factor".into(), num(COMPACTNESS_DECAY));
    Ok(rep)
}

/// Both sides of the coefficient-extraction identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientExtraction {
    pub lhs: Complex64,
    pub rhs: Complex64,
    /// Series terms used on the right side.
    pub terms: usize,
    /// `‖A_z‖ r^(2m) / (1 - r^2)` at the last term.
    pub tail_bound: f64,
}

impl CoefficientExtraction {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).norm()
    }
}

const EXTRACTION_TAIL: f64 = 1e-10;

/// `lhs = ∫_{rΔ} f̃(φ_z(v)) v̄^p / (1-|v|^2)^2 dλ(v)` by nested quadrature and
/// `rhs = r^(2p+2) Σ_m (m+1) ⟨A_z w^m, w^(m+p)⟩ r^(2m)` from the section of
/// `T_{f∘φ_z}`.
pub fn coefficient_extraction(
    f: &Symbol,
    z: UnitDiskPoint,
    p: usize,
    r: f64,
    n: usize,
    quad: &QuadratureConfig,
) -> Result<CoefficientExtraction> {
    if !(r > 0.0 && r <= 0.9) {
        return Err(Error::param("r", format!("must lie in (0, 0.9], got {r}")));
    }
    if p >= n {
        return Err(Error::param("p", format!("must be below N = {n}")));
    }
    // right side
    let composed = f.compose(z);
    let rule = quad.matrix_rule(&composed, n)?;
    let az = assemble(&composed, n, &rule)?;
    let norm = operator_norm(&az)?;
    let r2 = r * r;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut terms = 0;
    let mut tail_bound = f64::INFINITY;
    for m in 0..n - p {
        let inner = az.monomial_inner(m + p, m);
        sum += inner * ((m + 1) as f64) * r2.powi(m as i32);
        terms = m + 1;
        tail_bound = norm * r2.powi(m as i32 + 1) / (1.0 - r2);
        if tail_bound < EXTRACTION_TAIL {
            break;
        }
    }
    if tail_bound >= EXTRACTION_TAIL {
        log::warn!("coefficient_extraction: series tail bound {tail_bound:.2e} at N = {n}");
    }
    let rhs = sum * r2.powi(p as i32 + 1);

    // left side
    let outer = build_rule(32, 64, &PanelSpec::uniform())?;
    let zv = z.value();
    let zdef = z.defect();
    let max_image = (zv.norm() + r) / (1.0 + zv.norm() * r);
    let inner = quad.rule_with(f, quad.angular_for_radius(max_image))?;
    let nodes: Vec<(Point, f64)> = outer.nodes().collect();
    let mut acc = crate::sum::CompensatedComplex::default();
    for (xi, weight) in nodes {
        let v = Point {
            w: xi.w * r,
            defect: 1.0 - r2 * xi.norm_sqr(),
        };
        let image = raw::mobius_point(zv, zdef, &v);
        let b = berezin_direct(&inner, f, UnitDiskPoint::new(image.w)?)?;
        acc.add(b * v.w.conj().powu(p as u32) * (weight / (v.defect * v.defect)));
    }
    let lhs = acc.value() * r2;
    Ok(CoefficientExtraction {
        lhs,
        rhs,
        terms,
        tail_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_rules() {
        assert_eq!(
            boundedness_verdict(&[1.0, 1.0, 1.05, 1.2]),
            "boundedness NOT supported: profile increasing"
        );
        assert_eq!(
            boundedness_verdict(&[1.0, 0.5, 0.2, 0.1]),
            "boundedness supported on this grid (not a proof)"
        );
        assert!(decays(&[1.0, 0.4, 0.1, 0.01, 0.0]));
        assert!(!decays(&[1.0, 0.4, 0.3]));
        assert!(!decays(&[1.0]));
        assert_eq!(compactness_verdict(&[1.0, 1.0, 1.0], &[0.19, 0.02, 0.002]), "NOT consistent with compactness");
    }

    #[test]
    fn identity_operator_extraction() {
        let one = Symbol::parse("1").unwrap();
        let z = UnitDiskPoint::from_re_im(0.5, 0.0).unwrap();
        let quad = QuadratureConfig::new(32, 64);
        let r = 0.7;
        let e = coefficient_extraction(&one, z, 0, r, 64, &quad).unwrap();
        let exact = r * r / (1.0 - r * r);
        assert!((e.lhs.re - exact).abs() < 1e-10, "{}", e.lhs);
        assert!((e.rhs.re - exact).abs() < 1e-10, "{}", e.rhs);
        let e = coefficient_extraction(&one, z, 2, r, 64, &quad).unwrap();
        assert!(e.lhs.norm() < 1e-10);
        assert!(coefficient_extraction(&one, z, 0, 0.95, 64, &quad).is_err());
    }
}
