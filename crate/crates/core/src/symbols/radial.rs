//! Diagonal of the Toeplitz matrix of a radial symbol by 1-D quadrature.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Symbol;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::quadrature::DiskQuadrature;
use crate::sum::CompensatedComplex;

/// `gamma[n] = (n+1) ∫_0^1 g(√t) t^n dt` for `f(w) = g(|w|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialEigenvalues {
    pub gamma: Vec<Complex64>,
}

impl RadialEigenvalues {
    pub fn order(&self) -> usize {
        self.gamma.len()
    }
}

/// Geometric panel contributions must shrink toward `t = 1`.
const MIN_DECAY: f64 = 0.999;

/// Uses only the radial nodes of `rule`; the rule should be graded when the
/// symbol is boundary-singular.
pub fn radial_eigenvalues(f: &Symbol, n: usize, rule: &DiskQuadrature) -> Result<RadialEigenvalues> {
    if !f.flags().radial {
        return Err(Error::param("symbol", format!("'{f}' is not radial")));
    }
    if n == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    let nodes = rule.radial_nodes();
    let mut g = Vec::with_capacity(nodes.len());
    for (i, node) in nodes.iter().enumerate() {
        let p = Point {
            w: Complex64::new(node.radius().min(1.0 - f64::EPSILON / 2.0), 0.0),
            defect: node.defect,
        };
        let v = f.eval(&p)?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFiniteIntegrand {
                index: i,
                point: p.w,
                value: v,
            });
        }
        g.push(v);
    }

    if rule.is_graded() && rule.panels().len() >= 4 {
        let per = rule.n_radial();
        let panel = |j: usize| -> f64 {
            nodes[j * per..(j + 1) * per]
                .iter()
                .zip(&g[j * per..(j + 1) * per])
                .map(|(nd, v)| nd.weight * v.norm())
                .sum()
        };
        let last = rule.panels().len() - 1;
        let (a, b) = (panel(last - 2), panel(last - 1));
        if a > 0.0 && b >= MIN_DECAY * a {
            return Err(Error::param(
                "symbol",
                format!("'{f}' does not look integrable near |w| = 1 (panel mass ratio {:.4})", b / a),
            ));
        }
    }

    let gamma = (0..n)
        .map(|k| {
            let mut acc = CompensatedComplex::default();
            for (nd, v) in nodes.iter().zip(&g) {
                acc.add(*v * (nd.weight * nd.t.powi(k as i32)));
            }
            acc.value() * (k as f64 + 1.0)
        })
        .collect();
    Ok(RadialEigenvalues { gamma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{build_rule, PanelSpec, QuadratureConfig};

    #[test]
    fn constant_gives_ones() {
        let s = Symbol::parse("1").unwrap();
        let rule = build_rule(64, 1, &PanelSpec::uniform()).unwrap();
        let g = radial_eigenvalues(&s, 64, &rule).unwrap();
        assert!(g.gamma.iter().all(|v| (v - 1.0).norm() < 1e-13));
    }

    #[test]
    fn indicator_gives_powers() {
        let s = Symbol::parse("disk(0.7)").unwrap();
        let rule = QuadratureConfig::default().rule_for(&s).unwrap();
        let g = radial_eigenvalues(&s, 40, &rule).unwrap();
        for (n, v) in g.gamma.iter().enumerate() {
            let exact = 0.49f64.powi(n as i32 + 1);
            assert!((v.re - exact).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn boundary_power_beta_values() {
        let s = Symbol::parse("(1-abs(w)^2)^(-0.75)").unwrap();
        let rule = QuadratureConfig::default().rule_for(&s).unwrap();
        let g = radial_eigenvalues(&s, 2, &rule).unwrap();
        assert!((g.gamma[0].re - 4.0).abs() < 1e-12);
        assert!((g.gamma[1].re - 6.4).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_radial_and_non_integrable() {
        let rule = QuadratureConfig::default().graded_rule(Vec::new(), 1).unwrap();
        let s = Symbol::parse("w").unwrap();
        assert!(radial_eigenvalues(&s, 4, &rule).is_err());
        for a in ["1", "1.2"] {
            let s = Symbol::parse(&format!("(1-abs(w)^2)^(-{a})")).unwrap();
            assert!(radial_eigenvalues(&s, 4, &rule).is_err(), "a = {a}");
        }
        let s = Symbol::parse("(1-abs(w)^2)^(-0.95)").unwrap();
        assert!(radial_eigenvalues(&s, 4, &rule).is_ok());
    }
}
