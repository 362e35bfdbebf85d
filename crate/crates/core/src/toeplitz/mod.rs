//! Finite sections of Toeplitz operators in the orthonormal basis
//! `e_m(w) = √(m+1) w^m`.
//!
//! Entries are `A[n][m] = ⟨T_f e_m, e_n⟩ = √((m+1)(n+1)) ∫ f w^m w̄^n dλ`.
//! The normalized kernel has coefficients `c_m = (1-|z|^2) √(m+1) z̄^m`, so
//! the Berezin transform is `Σ A[n][m] c_m conj(c_n)` and `T_f k_z` is `A c`.

mod diagnostics;

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::UnitDiskPoint;
use crate::quadrature::{monomial_moments, DiskQuadrature};
use crate::report::{self, DiagnosticsReport, ReportKind};
use crate::sum::{Compensated, CompensatedComplex};
use crate::symbols::Symbol;

pub use diagnostics::{
    boundedness_verdict, coefficient_extraction, compactness_diagnostic, compactness_verdict,
    invariant_norm_profile, CoefficientExtraction, CompactnessSettings, ProfileSettings,
    BOUNDEDNESS_GROWTH, COMPACTNESS_DECAY, DEFAULT_RADII,
};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `N × N` section of `T_f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzMatrix {
    entries: DMatrix<Complex64>,
    symbol_id: String,
    rule_fingerprint: String,
}

impl ToeplitzMatrix {
    pub fn from_entries(entries: DMatrix<Complex64>, symbol_id: impl Into<String>, rule_fingerprint: impl Into<String>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::param("entries", "must be a nonempty square matrix"));
        }
        if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::param("entries", "must be finite"));
        }
        Ok(Self {
            entries,
            symbol_id: symbol_id.into(),
            rule_fingerprint: rule_fingerprint.into(),
        })
    }

    pub fn order(&self) -> usize {
        self.entries.nrows()
    }

    /// `A[n][m]`.
    #[inline]
    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.entries[(n, m)]
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn symbol_id(&self) -> &str {
        &self.symbol_id
    }

    pub fn rule_fingerprint(&self) -> &str {
        &self.rule_fingerprint
    }

    /// `⟨A w^m, w^n⟩` in the monomial (non-normalized) basis.
    pub fn monomial_inner(&self, n: usize, m: usize) -> Complex64 {
        self.get(n, m) / (((m + 1) * (n + 1)) as f64).sqrt()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            symbol_id: format!("adjoint[{}]", self.symbol_id),
            rule_fingerprint: self.rule_fingerprint.clone(),
        }
    }

    /// Leading `k × k` block.
    pub fn leading(&self, k: usize) -> Self {
        let k = k.clamp(1, self.order());
        Self {
            entries: self.entries.view((0, 0), (k, k)).into_owned(),
            symbol_id: self.symbol_id.clone(),
            rule_fingerprint: self.rule_fingerprint.clone(),
        }
    }

    /// `A v`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.order();
        (0..n)
            .map(|i| {
                let mut acc = CompensatedComplex::default();
                for (j, x) in v.iter().enumerate().take(n) {
                    acc.add(self.entries[(i, j)] * x);
                }
                acc.value()
            })
            .collect()
    }

    /// `A^H v`.
    pub fn apply_adjoint(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.order();
        (0..n)
            .map(|j| {
                let mut acc = CompensatedComplex::default();
                for (i, x) in v.iter().enumerate().take(n) {
                    acc.add(self.entries[(i, j)].conj() * x);
                }
                acc.value()
            })
            .collect()
    }

    /// Largest `|A[n][m]|` with `n != m`.
    pub fn off_diagonal_max(&self) -> f64 {
        let n = self.order();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    best = best.max(self.entries[(i, j)].norm());
                }
            }
        }
        best
    }

    /// Rows of `re,im` pairs, row-major.
    pub fn to_csv(&self) -> String {
        let n = self.order();
        let mut out = String::new();
        for i in 0..n {
            for j in 0..n {
                if j > 0 {
                    out.push(',');
                }
                let z = self.entries[(i, j)];
                let _ = write!(out, "{:.16e},{:.16e}", z.re, z.im);
            }
            out.push('\n');
        }
        out
    }

    /// Report with one row per entry.
    pub fn to_report(&self) -> DiagnosticsReport {
        let mut r = DiagnosticsReport::new(ReportKind::Matrix, Some(self.symbol_id.clone()));
        r.parameters.insert("N".into(), report::int(self.order()));
        r.grid.insert("rule".into(), report::text(self.rule_fingerprint.clone()));
        let n = self.order();
        for i in 0..n {
            for j in 0..n {
                let z = self.entries[(i, j)];
                r.values.push(report::row([
                    ("n", report::int(i)),
                    ("m", report::int(j)),
                    ("re", report::num(z.re)),
                    ("im", report::num(z.im)),
                ]));
            }
        }
        r.summary.insert("off_diagonal_max".into(), report::num(self.off_diagonal_max()));
        r.summary.insert("hilbert_schmidt".into(), report::num(hilbert_schmidt_norm(self)));
        r
    }
}

/// `A[n][m] = √((m+1)(n+1)) ∫ f w^m w̄^n dλ`.
pub fn assemble(f: &Symbol, n: usize, rule: &DiskQuadrature) -> Result<ToeplitzMatrix> {
    let moments = monomial_moments(rule, f, n)?;
    let sq: Vec<f64> = (1..=n).map(|k| (k as f64).sqrt()).collect();
    let entries = DMatrix::from_fn(n, n, |row, col| moments.get(col, row) * (sq[row] * sq[col]));
    ToeplitzMatrix::from_entries(entries, f.id(), rule.fingerprint())
}

/// Coefficients of `k_z` in the orthonormal basis, truncated at `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCoefficients {
    pub z: UnitDiskPoint,
    pub coeffs: Vec<Complex64>,
}

impl KernelCoefficients {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn squared_norm(&self) -> f64 {
        let mut acc = Compensated::default();
        self.coeffs.iter().for_each(|c| acc.add(c.norm_sqr()));
        acc.value()
    }

    /// `1 - ‖c‖^2 = x^N ((N+1) - N x)`, `x = |z|^2`.
    pub fn deficit(&self) -> f64 {
        truncation_deficit(self.z, self.order())
    }
}

/// Closed-form squared-norm deficit of the order-`N` truncation of `k_z`.
pub fn truncation_deficit(z: UnitDiskPoint, n: usize) -> f64 {
    let x = z.value().norm_sqr();
    let nf = n as f64;
    x.powi(n as i32) * ((nf + 1.0) - nf * x)
}

pub fn kernel_coefficients(z: UnitDiskPoint, n: usize) -> KernelCoefficients {
    let zbar = z.value().conj();
    let d = z.defect();
    let mut pow = Complex64::new(1.0, 0.0);
    let coeffs = (0..n)
        .map(|m| {
            let c = pow * (d * ((m + 1) as f64).sqrt());
            pow *= zbar;
            c
        })
        .collect();
    KernelCoefficients { z, coeffs }
}

/// How the matrix Berezin sum treats indices `>= N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailModel {
    /// Entries beyond the section are zero.
    Truncated,
    /// Each diagonal `A[m+d][m]` continues linearly from its last two entries.
    #[default]
    LinearDiagonal,
}

const TAIL_CUTOFF: f64 = 1e-22;
const TAIL_MAX_TERMS: usize = 1 << 20;

/// Whether an order-`n` section resolves the Berezin transform at `radius`.
pub fn berezin_reliable(n: usize, radius: f64) -> bool {
    radius * radius <= 1.0 - 10.0 / n as f64
}

/// `⟨A k_z, k_z⟩` from the matrix.
pub fn berezin_from_matrix(a: &ToeplitzMatrix, z: UnitDiskPoint, tail: TailModel) -> Complex64 {
    let n = a.order();
    if !berezin_reliable(n, z.value().norm()) {
        log::debug!(
            "berezin_from_matrix: |z| = {:.4} is beyond the reliable range of an order-{n} section",
            z.value().norm()
        );
    }
    let c = kernel_coefficients(z, n).coeffs;
    let ac = a.apply(&c);
    let mut acc = CompensatedComplex::default();
    for (cn, v) in c.iter().zip(&ac) {
        acc.add(cn.conj() * v);
    }
    if tail == TailModel::LinearDiagonal && z.value() != ZERO {
        acc.add(linear_diagonal_tail(a, z));
    }
    acc.value()
}

fn linear_diagonal_tail(a: &ToeplitzMatrix, z: UnitDiskPoint) -> Complex64 {
    let n = a.order() as isize;
    let zv = z.value();
    let d0 = z.defect();
    let r = zv.norm();
    let mut total = CompensatedComplex::default();
    for d in -(n - 1)..n {
        let len = (n - d.abs()) as usize;
        let at = |j: usize| {
            if d >= 0 {
                a.get(j + d as usize, j)
            } else {
                a.get(j, j + (-d) as usize)
            }
        };
        let last = at(len - 1);
        let slope = if len >= 2 { last - at(len - 2) } else { ZERO };
        let scale = last.norm() + slope.norm();
        if scale == 0.0 {
            continue;
        }
        let da = d.unsigned_abs();
        // term(j) = a_j c_m conj(c_n) = a_j d0^2 √((j+1)(j+|d|+1)) |z|^(2j) z^d,
        // with z^d read as z̄^|d| for d < 0
        let phase = if d >= 0 { zv.powu(da as u32) } else { zv.conj().powu(da as u32) };
        let phase_abs = r.powi(da as i32);
        let mut j = len;
        let mut rho = r.powi(2 * j as i32);
        let mut sum = CompensatedComplex::default();
        while j < len + TAIL_MAX_TERMS {
            let weight = d0 * d0 * (((j + 1) * (j + da + 1)) as f64).sqrt() * rho;
            let aj = last + slope * ((j - (len - 1)) as f64);
            if weight * phase_abs * (aj.norm() + scale) < TAIL_CUTOFF {
                break;
            }
            sum.add(aj * weight);
            rho *= r * r;
            j += 1;
        }
        total.add(sum.value() * phase);
    }
    total.value()
}

/// `A D_r`, `D_r = diag(r^(2(m+1)))`: the section of `T_f^[r]`.
pub fn truncated_operator(a: &ToeplitzMatrix, r: f64) -> Result<ToeplitzMatrix> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::param("r", format!("must lie in (0, 1), got {r}")));
    }
    let mut m = a.entries.clone();
    let r2 = r * r;
    let mut s = r2;
    for j in 0..a.order() {
        m.column_mut(j).scale_mut(s);
        s *= r2;
    }
    Ok(ToeplitzMatrix {
        entries: m,
        symbol_id: format!("{}|r={r:?}", a.symbol_id),
        rule_fingerprint: a.rule_fingerprint.clone(),
    })
}

/// `A (I - D_r)`.
pub fn truncation_remainder(a: &ToeplitzMatrix, r: f64) -> Result<ToeplitzMatrix> {
    let t = truncated_operator(a, r)?;
    Ok(ToeplitzMatrix {
        entries: &a.entries - &t.entries,
        symbol_id: format!("{}|I-D(r={r:?})", a.symbol_id),
        rule_fingerprint: a.rule_fingerprint.clone(),
    })
}

/// Largest singular value.
pub fn operator_norm(a: &ToeplitzMatrix) -> Result<f64> {
    let n = a.order();
    let svd = a
        .entries
        .clone()
        .try_svd(false, false, f64::EPSILON, 10_000 + 200 * n)
        .ok_or(Error::SpectralNonConvergence { order: n })?;
    let s = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if !s.is_finite() {
        return Err(Error::SpectralNonConvergence { order: n });
    }
    Ok(s)
}

/// `(Σ |A[n][m]|^2)^(1/2)`.
pub fn hilbert_schmidt_norm(a: &ToeplitzMatrix) -> f64 {
    let mut acc = Compensated::default();
    a.entries.iter().for_each(|z| acc.add(z.norm_sqr()));
    acc.value().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{build_rule, PanelSpec, QuadratureConfig};

    fn z(re: f64, im: f64) -> UnitDiskPoint {
        UnitDiskPoint::from_re_im(re, im).unwrap()
    }

    fn matrix(text: &str, n: usize) -> ToeplitzMatrix {
        let s = Symbol::parse(text).unwrap();
        let rule = QuadratureConfig::default().matrix_rule(&s, n).unwrap();
        assemble(&s, n, &rule).unwrap()
    }

    #[test]
    fn assemble_examples() {
        let a = matrix("1", 64);
        let id = DMatrix::<Complex64>::identity(64, 64);
        assert!((a.entries() - id).iter().all(|e| e.norm() <= 1e-12));

        let a = matrix("disk(0.5)", 64);
        for n in 0..64 {
            assert!((a.get(n, n).re - 0.25f64.powi(n as i32 + 1)).abs() <= 1e-10);
        }
        assert!(a.off_diagonal_max() <= 1e-10);

        let a = matrix("w", 32);
        for n in 0..32 {
            for m in 0..32 {
                let exact = if n == m + 1 {
                    ((m as f64 + 1.0) / (m as f64 + 2.0)).sqrt()
                } else {
                    0.0
                };
                assert!((a.get(n, m) - exact).norm() <= 1e-10, "({n},{m})");
            }
        }
    }

    #[test]
    fn insufficient_angles_rejected() {
        let s = Symbol::parse("w").unwrap();
        let rule = build_rule(16, 32, &PanelSpec::uniform()).unwrap();
        assert!(matches!(
            assemble(&s, 20, &rule),
            Err(Error::InsufficientAngularResolution { .. })
        ));
    }

    #[test]
    fn kernel_coefficient_examples() {
        let k = kernel_coefficients(UnitDiskPoint::origin(), 5);
        assert_eq!(k.coeffs[0], Complex64::new(1.0, 0.0));
        assert!(k.coeffs[1..].iter().all(|c| *c == ZERO));
        let p = z(0.5, 0.0);
        let k = kernel_coefficients(p, 8);
        let direct: f64 = (8..2000).map(|m| 0.75f64.powi(2) * (m as f64 + 1.0) * 0.25f64.powi(m)).sum();
        assert!((k.deficit() - direct).abs() < 1e-15);
        assert!((1.0 - k.squared_norm() - direct).abs() < 1e-14);
        let k = kernel_coefficients(z(0.3, 0.4), 400);
        assert!((k.squared_norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn berezin_from_matrix_examples() {
        let id = matrix("1", 64);
        for p in [z(0.0, 0.0), z(0.5, 0.2), z(-0.6, 0.6)] {
            let v = berezin_from_matrix(&id, p, TailModel::Truncated);
            assert!((v.re - (1.0 - truncation_deficit(p, 64))).abs() < 1e-13);
            let v = berezin_from_matrix(&id, p, TailModel::LinearDiagonal);
            assert!((v - 1.0).norm() < 1e-13);
        }
        let a = matrix("abs(w)^2", 16);
        assert!((berezin_from_matrix(&a, UnitDiskPoint::origin(), TailModel::Truncated) - 0.5).norm() < 1e-14);

        let a = matrix("disk(0.6)", 64);
        let p = z(0.3, -0.5);
        let x = p.value().norm_sqr();
        let closed: f64 = (0..400)
            .map(|m| (1.0 - x).powi(2) * (m as f64 + 1.0) * 0.36f64.powi(m + 1) * x.powi(m))
            .sum();
        let v = berezin_from_matrix(&a, p, TailModel::LinearDiagonal);
        assert!((v.re - closed).abs() < 1e-12, "{} vs {closed}", v.re);
    }

    #[test]
    fn truncation_and_norms() {
        let a = matrix("disk(0.5)", 64);
        let near_one = truncated_operator(&a, 1.0 - 1e-12).unwrap();
        assert!((near_one.entries() - a.entries()).iter().all(|e| e.norm() <= 1e-9));
        for r in [0.9, 0.99, 0.999] {
            let rem = truncation_remainder(&a, r).unwrap();
            let v = operator_norm(&rem).unwrap();
            assert!((v - 0.25 * (1.0 - r * r)).abs() <= 1e-8, "r={r}: {v}");
        }
        let t = truncated_operator(&a, 0.9).unwrap();
        let hs = hilbert_schmidt_norm(&t);
        let op = operator_norm(&a).unwrap();
        let r4 = 0.9f64.powi(4);
        assert!(hs * hs <= op * op * r4 / (1.0 - r4));
        assert!(truncated_operator(&a, 1.0).is_err());
        assert!(truncated_operator(&a, 0.0).is_err());

        let id = matrix("1", 16);
        assert!((operator_norm(&id).unwrap() - 1.0).abs() < 1e-12);
        assert!((hilbert_schmidt_norm(&id) - 4.0).abs() < 1e-12);
        let rem = truncation_remainder(&id, 0.9).unwrap();
        assert!((operator_norm(&rem).unwrap() - (1.0 - 0.81f64.powi(16))).abs() < 1e-12);
    }

    #[test]
    fn adjoint_law() {
        for text in ["w", "w^2*conj(w) + i*abs(w)", "exp(w)"] {
            let a = matrix(text, 24);
            let b = matrix(&format!("conj({text})"), 24);
            let diff = (a.adjoint().entries() - b.entries()).iter().fold(0.0f64, |m, e| m.max(e.norm()));
            assert!(diff <= 1e-10, "{text}: {diff}");
        }
    }

    #[test]
    fn csv_export() {
        let a = matrix("w", 3);
        let csv = a.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].split(',').count(), 6);
        assert!(lines[1].starts_with("7.07106781186547"));
    }
}
