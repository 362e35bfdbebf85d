//! Bergman projection, Berezin transform by quadrature, the operator `S`,
//! the weighted `L^p` ratio and the Schur row/column integrals.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{raw, Point, UnitDiskPoint};
use crate::quadrature::DiskQuadrature;
use crate::symbols::Symbol;
use crate::toeplitz::ToeplitzMatrix;

/// `(Pg)(z) = ∫ g(w) conj(K_z(w)) dλ(w)`.
pub fn bergman_project<G>(rule: &DiskQuadrature, g: G, z: UnitDiskPoint) -> Result<Complex64>
where
    G: Fn(&Point) -> Result<Complex64> + Sync + Send,
{
    let zv = z.value();
    rule.check_peak_resolution(zv, "bergman_project");
    rule.try_integrate(|p| Ok(g(p)? * raw::bergman_kernel(zv, p.w).conj()))
}

/// `f̃(z) = ∫ f |k_z|^2 dλ`.
pub fn berezin_direct(rule: &DiskQuadrature, f: &Symbol, z: UnitDiskPoint) -> Result<Complex64> {
    let zv = z.value();
    let zdef = z.defect();
    if zv.norm() > 0.95 && !rule.is_graded() {
        log::warn!(
            "berezin_direct: |z| = {:.4} with an ungraded rule; the peak of |k_z|^2 is narrow",
            zv.norm()
        );
    }
    rule.check_peak_resolution(zv, "berezin_direct");
    rule.try_integrate(|p| Ok(f.eval(p)? * raw::normalized_kernel_sqr(zv, zdef, p.w)))
}

fn check_epsilon(epsilon: f64, bound: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < bound {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange { epsilon, bound })
    }
}

/// Weight of `S` at `v`, written through the defect identity:
/// `(1-|z|^2)^(-2ε) (1-|v|^2)^(-2ε) |1 - z̄v|^(-2(1-2ε))`.
#[inline]
fn s_weight(zv: Complex64, zdef: f64, p: &Point, epsilon: f64) -> f64 {
    let d = (Complex64::new(1.0, 0.0) - zv.conj() * p.w).norm_sqr();
    (zdef * p.defect).powf(-2.0 * epsilon) * d.powf(2.0 * epsilon - 1.0)
}

/// `(Sf)(z) = ∫ |f(v)| (1-|z|^2)^(-1) (1-|v|^2)^(-1) (1-|φ_z(v)|^2)^(1-2ε) dλ(v)`.
///
/// The weight is singular at the boundary; pass a graded rule.
pub fn operator_s<F>(rule: &DiskQuadrature, f: F, z: UnitDiskPoint, epsilon: f64) -> Result<f64>
where
    F: Fn(&Point) -> Result<Complex64> + Sync + Send,
{
    check_epsilon(epsilon, 0.5)?;
    let zv = z.value();
    let zdef = z.defect();
    rule.check_peak_resolution(zv, "operator_s");
    let s = rule.try_integrate(|p| Ok(Complex64::new(f(p)?.norm() * s_weight(zv, zdef, p, epsilon), 0.0)))?;
    Ok(s.re)
}

/// [`operator_s`] for `f = Σ coeffs[n] w^n`, evaluated ring by ring.
pub fn operator_s_series(rule: &DiskQuadrature, coeffs: &[Complex64], z: UnitDiskPoint, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon, 0.5)?;
    let zv = z.value();
    let zdef = z.defect();
    rule.check_peak_resolution(zv, "operator_s_series");
    let s = rule.try_integrate_series(coeffs, |p, f| Ok(Complex64::new(f.norm() * s_weight(zv, zdef, p, epsilon), 0.0)))?;
    Ok(s.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Ratio {
    pub s: f64,
    pub norm_p: f64,
    /// `Sf(z) / (K_z(z)^ε ‖f‖_p)`.
    pub ratio: f64,
    /// `Sf(z) / (K_z(z)^(2ε) ‖f‖_p)`.
    pub ratio_k2eps: f64,
}

/// Empirical constant of `|Sf(z)| <= C K_z(z)^ε ‖f‖_p` at one `z`; both
/// normalizations of the kernel power are reported.
pub fn lemma3_ratio<F>(rule: &DiskQuadrature, f: F, z: UnitDiskPoint, epsilon: f64, p: f64) -> Result<Lemma3Ratio>
where
    F: Fn(&Point) -> Result<Complex64> + Sync + Send,
{
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param("p", format!("must be > 1, got {p}")));
    }
    let p_conj = p / (p - 1.0);
    check_epsilon(epsilon, 1.0 / (2.0 * p_conj))?;
    let s = operator_s(rule, &f, z, epsilon)?;
    let norm_p = rule.try_lp_norm(&f, p)?;
    if norm_p == 0.0 {
        if s == 0.0 {
            return Ok(Lemma3Ratio {
                s,
                norm_p,
                ratio: 0.0,
                ratio_k2eps: 0.0,
            });
        }
        return Err(Error::ZeroNorm { numerator: s });
    }
    // K_z(z) = (1-|z|^2)^(-2)
    let zdef = z.defect();
    Ok(Lemma3Ratio {
        s,
        norm_p,
        ratio: s * zdef.powf(2.0 * epsilon) / norm_p,
        ratio_k2eps: s * zdef.powf(4.0 * epsilon) / norm_p,
    })
}

/// Which power of the Schur weight `g` equals `K_v(v)^ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentConvention {
    /// `g(v)^2 = K_v(v)^ε`; the integrals carry `g^2`.
    #[default]
    WeightSquared,
    /// `g(v) = K_v(v)^ε`; the integrals carry `g`.
    WeightPlain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchurWeightSpec {
    pub epsilon: f64,
    pub convention: ExponentConvention,
}

impl SchurWeightSpec {
    pub fn new(epsilon: f64, convention: ExponentConvention) -> Result<Self> {
        check_epsilon(epsilon, 0.5)?;
        Ok(Self { epsilon, convention })
    }

    /// `g` at a point with defect `1 - |v|^2`.
    pub fn g(&self, defect: f64) -> f64 {
        match self.convention {
            ExponentConvention::WeightSquared => defect.powf(-self.epsilon),
            ExponentConvention::WeightPlain => defect.powf(-2.0 * self.epsilon),
        }
    }

    /// The factor the row and column integrals carry.
    pub fn integration_weight(&self, defect: f64) -> f64 {
        let g = self.g(defect);
        match self.convention {
            ExponentConvention::WeightSquared => g * g,
            ExponentConvention::WeightPlain => g,
        }
    }
}

impl Default for SchurWeightSpec {
    fn default() -> Self {
        Self {
            epsilon: 0.125,
            convention: ExponentConvention::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchurIntegral {
    pub value: f64,
    /// `value` divided by the weight at the fixed point: the Schur constant there.
    pub constant: f64,
}

const SCHUR_TRUNCATION_STEP: usize = 16;
const SCHUR_TRUNCATION_TOL: f64 = 0.01;

fn weighted_series_integral(rule: &DiskQuadrature, coeffs: &[Complex64], weight: &SchurWeightSpec) -> Result<f64> {
    let s = rule.try_integrate_series(coeffs, |p, f| {
        Ok(Complex64::new(f.norm() * weight.integration_weight(p.defect), 0.0))
    })?;
    Ok(s.re)
}

/// Integral of `|series|` with the truncation check: dropping the last 16
/// coefficients may not move the result by more than 1%.
fn checked_integral(
    rule: &DiskQuadrature,
    coeffs: &[Complex64],
    weight: &SchurWeightSpec,
    at: Complex64,
) -> Result<f64> {
    let full = weighted_series_integral(rule, coeffs, weight)?;
    if coeffs.len() > SCHUR_TRUNCATION_STEP {
        let short = weighted_series_integral(rule, &coeffs[..coeffs.len() - SCHUR_TRUNCATION_STEP], weight)?;
        let relative_change = (full - short).abs() / full.abs().max(f64::MIN_POSITIVE);
        if full != 0.0 && relative_change > SCHUR_TRUNCATION_TOL {
            return Err(Error::KernelTruncation {
                point: at,
                relative_change,
            });
        }
    }
    Ok(full)
}

/// Coefficients of `v ↦ (T_f K_u)(v)` in powers of `v`:
/// `(T_f K_u)(v) = Σ_n √(n+1) v^n Σ_m A[n][m] √(m+1) ū^m`.
pub fn kernel_image_coefficients(a: &ToeplitzMatrix, u: Complex64) -> Vec<Complex64> {
    let n = a.order();
    let mut c = Vec::with_capacity(n);
    let mut pow = Complex64::new(1.0, 0.0);
    for m in 0..n {
        c.push(pow * ((m + 1) as f64).sqrt());
        pow *= u.conj();
    }
    a.apply(&c)
        .into_iter()
        .enumerate()
        .map(|(k, d)| d * ((k + 1) as f64).sqrt())
        .collect()
}

/// `∫ |(T_f K_u)(v)| g(v)^2 dλ(v)` (row) with `(T_f K_u)` rebuilt from `A`.
pub fn schur_row_integral(
    a: &ToeplitzMatrix,
    u: UnitDiskPoint,
    weight: &SchurWeightSpec,
    rule: &DiskQuadrature,
) -> Result<SchurIntegral> {
    let coeffs = kernel_image_coefficients(a, u.value());
    let value = checked_integral(rule, &coeffs, weight, u.value())?;
    Ok(SchurIntegral {
        value,
        constant: value / weight.integration_weight(u.defect()),
    })
}

/// `∫ |(T_f K_u)(v)| g(u)^2 dλ(u)` (column) at fixed `v`.
pub fn schur_col_integral(
    a: &ToeplitzMatrix,
    v: UnitDiskPoint,
    weight: &SchurWeightSpec,
    rule: &DiskQuadrature,
) -> Result<SchurIntegral> {
    // As a function of u the kernel image is conj(Σ_m conj(s_m) √(m+1) u^m)
    // with s = A^T e(v).
    let n = a.order();
    let vv = v.value();
    let mut e = Vec::with_capacity(n);
    let mut pow = Complex64::new(1.0, 0.0);
    for k in 0..n {
        e.push(pow * ((k + 1) as f64).sqrt());
        pow *= vv;
    }
    let coeffs: Vec<Complex64> = (0..n)
        .map(|m| {
            let s: Complex64 = (0..n).map(|k| a.get(k, m) * e[k]).sum();
            s.conj() * ((m + 1) as f64).sqrt()
        })
        .collect();
    let value = checked_integral(rule, &coeffs, weight, vv)?;
    Ok(SchurIntegral {
        value,
        constant: value / weight.integration_weight(v.defect()),
    })
}

/// Taylor coefficients of `Pg`: `(k+1) ∫ g w̄^k dλ` for `k < n`.
pub fn projection_coefficients<G>(rule: &DiskQuadrature, g: G, n: usize) -> Result<Vec<Complex64>>
where
    G: Fn(&Point) -> Result<Complex64> + Sync + Send,
{
    Ok(rule
        .conjugate_moments(g, n)?
        .into_iter()
        .enumerate()
        .map(|(k, c)| c * (k + 1) as f64)
        .collect())
}

/// `Σ coeffs[n] w^n` by Horner's rule.
pub fn eval_series(coeffs: &[Complex64], w: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * w + c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{build_rule, PanelSpec};
    use crate::toeplitz::assemble;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn projection_examples() {
        let rule = build_rule(32, 64, &PanelSpec::uniform()).unwrap();
        let z = UnitDiskPoint::from_re_im(0.3, -0.4).unwrap();
        let p = bergman_project(&rule, |p| Ok(p.w.powu(3)), z).unwrap();
        assert!((p - z.value().powu(3)).norm() < 1e-12);
        let p = bergman_project(&rule, |p| Ok(p.w.conj()), z).unwrap();
        assert!(p.norm() < 1e-13);
        let p = bergman_project(&rule, |p| Ok(c(p.norm_sqr(), 0.0)), z).unwrap();
        assert!((p - c(0.5, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn berezin_examples() {
        let rule = build_rule(32, 128, &PanelSpec::uniform().with_breakpoints([0.25])).unwrap();
        let one = Symbol::parse("1").unwrap();
        let z = UnitDiskPoint::from_re_im(0.5, 0.2).unwrap();
        assert!((berezin_direct(&rule, &one, z).unwrap() - 1.0).norm() < 1e-12);
        let disk = Symbol::parse("disk(0.5)").unwrap();
        let b0 = berezin_direct(&rule, &disk, UnitDiskPoint::origin()).unwrap();
        assert!((b0.re - 0.25).abs() < 1e-13);
    }

    #[test]
    fn operator_s_examples() {
        let rule = build_rule(32, 64, &PanelSpec::graded(24)).unwrap();
        let z0 = UnitDiskPoint::origin();
        let s = operator_s(&rule, |_| Ok(c(1.0, 0.0)), z0, 0.125).unwrap();
        assert!((s - 4.0 / 3.0).abs() < 1e-8, "{s}");
        assert_eq!(operator_s(&rule, |_| Ok(c(0.0, 0.0)), z0, 0.125).unwrap(), 0.0);
        assert!(matches!(
            operator_s(&rule, |_| Ok(c(1.0, 0.0)), z0, 0.5),
            Err(Error::EpsilonOutOfRange { .. })
        ));
        let r = lemma3_ratio(&rule, |_| Ok(c(1.0, 0.0)), z0, 0.125, 2.0).unwrap();
        assert!((r.ratio - 4.0 / 3.0).abs() < 1e-8);
        assert!(matches!(
            lemma3_ratio(&rule, |_| Ok(c(1.0, 0.0)), z0, 0.25, 2.0),
            Err(Error::EpsilonOutOfRange { .. })
        ));
        let r = lemma3_ratio(&rule, |_| Ok(c(0.0, 0.0)), z0, 0.125, 2.0).unwrap();
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn schur_identity_row() {
        let rule = build_rule(32, 64, &PanelSpec::graded(24)).unwrap();
        let one = Symbol::parse("1").unwrap();
        let a = assemble(&one, 8, &build_rule(8, 16, &PanelSpec::uniform()).unwrap()).unwrap();
        let w = SchurWeightSpec::default();
        let row = schur_row_integral(&a, UnitDiskPoint::origin(), &w, &rule).unwrap();
        assert!((row.value - 4.0 / 3.0).abs() < 1e-8);
        assert!((row.constant - 4.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn series_helpers() {
        let rule = build_rule(16, 32, &PanelSpec::uniform()).unwrap();
        let coeffs = projection_coefficients(&rule, |p| Ok(p.w * p.w + p.w.conj()), 8).unwrap();
        assert!((coeffs[2] - 1.0).norm() < 1e-13);
        assert!(coeffs.iter().enumerate().all(|(k, x)| k == 2 || x.norm() < 1e-13));
        let w = c(0.3, 0.1);
        assert!((eval_series(&coeffs, w) - w * w).norm() < 1e-13);
    }
}
