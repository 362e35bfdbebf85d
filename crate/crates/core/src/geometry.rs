//! Disk automorphisms, Bergman kernels, the Bergman metric and its balls.
//!
//! Every quantity near the boundary is computed from the *defect*
//! `1 - |w|^2` rather than from `|w|`, using the identity
//! `1 - |φ_z(w)|^2 = (1 - |z|^2)(1 - |w|^2) / |1 - z̄w|^2`. This keeps the
//! relative precision of kernel factors even when `|w|` rounds to 1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points with `|z| >= 1 - BOUNDARY_MARGIN` are rejected.
pub const BOUNDARY_MARGIN: f64 = 1e-12;

/// Largest double strictly below 1.
const ONE_MINUS_ULP: f64 = 1.0 - f64::EPSILON / 2.0;

/// `1 - |w|^2` evaluated as `(1 - |w|)(1 + |w|)`.
#[inline]
pub fn defect_of(w: Complex64) -> f64 {
    let r = w.norm();
    (1.0 - r) * (1.0 + r)
}

/// A validated point of the open unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Complex64", into = "Complex64")]
pub struct UnitDiskPoint(Complex64);

impl UnitDiskPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) || z.norm() >= 1.0 - BOUNDARY_MARGIN {
            return Err(Error::OutsideDisk(z));
        }
        Ok(Self(z))
    }

    pub fn from_re_im(re: f64, im: f64) -> Result<Self> {
        Self::new(Complex64::new(re, im))
    }

    pub fn from_polar(radius: f64, angle: f64) -> Result<Self> {
        Self::new(Complex64::from_polar(radius, angle))
    }

    pub const fn origin() -> Self {
        Self(Complex64 { re: 0.0, im: 0.0 })
    }

    #[inline]
    pub fn value(self) -> Complex64 {
        self.0
    }

    #[inline]
    pub fn defect(self) -> f64 {
        defect_of(self.0)
    }

    pub fn point(self) -> Point {
        Point::new(self.0)
    }
}

impl TryFrom<Complex64> for UnitDiskPoint {
    type Error = Error;
    fn try_from(z: Complex64) -> Result<Self> {
        Self::new(z)
    }
}

impl From<UnitDiskPoint> for Complex64 {
    fn from(p: UnitDiskPoint) -> Self {
        p.0
    }
}

/// An evaluation point: the complex value together with `1 - |w|^2`.
///
/// Quadrature nodes and hyperbolic grid points are built from an exact
/// defect; `w` is then only used for angular information and smooth factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub w: Complex64,
    pub defect: f64,
}

impl Point {
    pub fn new(w: Complex64) -> Self {
        Self {
            w,
            defect: defect_of(w),
        }
    }

    /// Point at angle `theta` whose defect is exactly `defect`.
    pub fn from_defect(defect: f64, theta: f64) -> Self {
        let r = (1.0 - defect).max(0.0).sqrt().min(ONE_MINUS_ULP);
        Self {
            w: Complex64::from_polar(r, theta),
            defect,
        }
    }

    /// `|w|^2` recovered from the defect when that is the more accurate route.
    #[inline]
    pub fn norm_sqr(&self) -> f64 {
        if self.defect < 0.5 {
            1.0 - self.defect
        } else {
            self.w.norm_sqr()
        }
    }
}

/// Unchecked kernels on raw complex values; callers guarantee `|z|, |w| < 1`.
pub mod raw {
    use super::*;

    /// `φ_z(w) = (z - w) / (1 - z̄w)`.
    #[inline]
    pub fn mobius(z: Complex64, w: Complex64) -> Complex64 {
        (z - w) / (Complex64::new(1.0, 0.0) - z.conj() * w)
    }

    /// `φ_z'(w) = -(1 - |z|^2) / (1 - z̄w)^2`.
    #[inline]
    pub fn mobius_derivative(z: Complex64, w: Complex64) -> Complex64 {
        let d = Complex64::new(1.0, 0.0) - z.conj() * w;
        -Complex64::new(defect_of(z), 0.0) / (d * d)
    }

    /// `φ_z` applied to a [`Point`], with the image defect computed exactly.
    #[inline]
    pub fn mobius_point(z: Complex64, zdef: f64, p: &Point) -> Point {
        let denom = Complex64::new(1.0, 0.0) - z.conj() * p.w;
        Point {
            w: (z - p.w) / denom,
            defect: zdef * p.defect / denom.norm_sqr(),
        }
    }

    /// `K_z(w) = 1 / (1 - z̄w)^2`.
    #[inline]
    pub fn bergman_kernel(z: Complex64, w: Complex64) -> Complex64 {
        let d = Complex64::new(1.0, 0.0) - z.conj() * w;
        (d * d).inv()
    }

    /// `k_z(w) = (1 - |z|^2) / (1 - z̄w)^2`.
    #[inline]
    pub fn normalized_kernel(z: Complex64, w: Complex64) -> Complex64 {
        bergman_kernel(z, w) * defect_of(z)
    }

    /// `|k_z(w)|^2`.
    #[inline]
    pub fn normalized_kernel_sqr(z: Complex64, zdef: f64, w: Complex64) -> f64 {
        let d = (Complex64::new(1.0, 0.0) - z.conj() * w).norm_sqr();
        zdef * zdef / (d * d)
    }

    /// Bergman metric `½ log((1+ρ)/(1-ρ))`, `ρ = |φ_z(w)|`, written as
    /// `log(1+ρ) - ½ log(1-ρ^2)` with `1-ρ^2` taken from the defect identity.
    pub fn bergman_distance(z: Complex64, w: Complex64) -> f64 {
        let denom = (Complex64::new(1.0, 0.0) - z.conj() * w).norm_sqr();
        let rho = ((z - w).norm_sqr() / denom).sqrt();
        let one_minus_rho2 = defect_of(z) * defect_of(w) / denom;
        (rho.ln_1p() - 0.5 * one_minus_rho2.ln()).max(0.0)
    }
}

/// `φ_z(w)`.
pub fn mobius(z: UnitDiskPoint, w: UnitDiskPoint) -> Complex64 {
    raw::mobius(z.0, w.0)
}

/// Bergman kernel `K_z(w)`.
pub fn bergman_kernel(z: UnitDiskPoint, w: UnitDiskPoint) -> Complex64 {
    raw::bergman_kernel(z.0, w.0)
}

/// Normalized kernel `k_z(w) = (1 - |z|^2) K_z(w)`.
pub fn normalized_kernel(z: UnitDiskPoint, w: UnitDiskPoint) -> Complex64 {
    raw::normalized_kernel(z.0, w.0)
}

/// Bergman (hyperbolic) distance `B(z, w)`.
pub fn bergman_distance(z: UnitDiskPoint, w: UnitDiskPoint) -> f64 {
    raw::bergman_distance(z.0, w.0)
}

/// A Euclidean disk `{w : |w - center| < radius}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EuclideanDisk {
    pub center: Complex64,
    pub radius: f64,
}

impl EuclideanDisk {
    pub fn contains(&self, w: Complex64) -> bool {
        (w - self.center).norm() < self.radius
    }
}

/// The Bergman-metric ball `D(z, δ) = {w : B(z, w) < δ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicDisk {
    pub center: UnitDiskPoint,
    pub delta: f64,
}

impl HyperbolicDisk {
    pub fn new(center: UnitDiskPoint, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::param("delta", format!("must be positive, got {delta}")));
        }
        Ok(Self { center, delta })
    }

    pub fn contains(&self, w: UnitDiskPoint) -> bool {
        bergman_distance(self.center, w) < self.delta
    }

    pub fn to_euclidean(&self) -> EuclideanDisk {
        hyperbolic_to_euclidean(self)
    }
}

/// Center and radius of `D(z, δ)`: with `s = tanh δ`,
/// `C = (1 - s^2) z / (1 - s^2|z|^2)` and `R = (1 - |z|^2) s / (1 - s^2|z|^2)`.
pub fn hyperbolic_to_euclidean(disk: &HyperbolicDisk) -> EuclideanDisk {
    euclidean_from_defect(disk.center.0, disk.center.defect(), disk.delta.tanh())
}

/// Same as [`hyperbolic_to_euclidean`] for a center given with its defect and
/// `s = tanh δ`; valid for points arbitrarily close to the boundary.
pub fn euclidean_from_defect(z: Complex64, zdef: f64, s: f64) -> EuclideanDisk {
    let s2 = s * s;
    // 1 - s^2|z|^2 = 1 - s^2 + s^2 (1 - |z|^2)
    let denom = (1.0 - s2) + s2 * zdef;
    EuclideanDisk {
        center: z * ((1.0 - s2) / denom),
        radius: zdef * s / denom,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn p(re: f64, im: f64) -> UnitDiskPoint {
        UnitDiskPoint::from_re_im(re, im).unwrap()
    }

    #[test]
    fn rejects_boundary_points() {
        assert!(UnitDiskPoint::from_re_im(1.0, 0.0).is_err());
        assert!(UnitDiskPoint::from_re_im(0.0, 1.0 - 1e-13).is_err());
        assert!(UnitDiskPoint::from_re_im(f64::NAN, 0.0).is_err());
        assert!(UnitDiskPoint::from_re_im(0.0, 0.995).is_ok());
    }

    #[test]
    fn mobius_examples() {
        let z = p(0.3, -0.4);
        assert!(mobius(z, z).norm() < 1e-16);
        assert!((mobius(z, UnitDiskPoint::origin()) - z.value()).norm() < 1e-16);
        let v = mobius(p(0.5, 0.0), p(0.25, 0.0));
        assert!(close(v.re, 0.25 / 0.875, 1e-15) && v.im == 0.0);
        assert!(close(v.re, 0.285_714_285_714_285_7, 1e-15));
    }

    #[test]
    fn kernel_examples() {
        let w = p(-0.2, 0.7);
        assert!((bergman_kernel(UnitDiskPoint::origin(), w) - 1.0).norm() < 1e-16);
        let z = p(0.6, 0.1);
        let d = 1.0 - z.value().norm_sqr();
        assert!((bergman_kernel(z, z).re - 1.0 / (d * d)).abs() < 1e-12);
        let ratio = normalized_kernel(z, w) / bergman_kernel(z, w);
        assert!((ratio - d).norm() < 1e-15);
        // K_z(φ_z(v)) k_z(v) = 1/(1-|z|^2)
        let z = p(0.5, 0.0);
        let v = p(0.2, 0.0);
        let phi = UnitDiskPoint::new(mobius(z, v)).unwrap();
        let lhs = bergman_kernel(z, phi) * normalized_kernel(z, v);
        assert!((lhs - 4.0 / 3.0).norm() < 1e-14);
    }

    #[test]
    fn distance_examples() {
        let z = p(0.1, 0.8);
        assert_eq!(bergman_distance(z, z), 0.0);
        let b = bergman_distance(UnitDiskPoint::origin(), p(0.5, 0.0));
        assert!(close(b, 0.5 * 3f64.ln(), 1e-15));
        assert!(close(b, 0.549_306_1, 1e-7));
    }

    #[test]
    fn hyperbolic_disk_examples() {
        let delta = 0.7;
        let e = HyperbolicDisk::new(UnitDiskPoint::origin(), delta)
            .unwrap()
            .to_euclidean();
        assert_eq!(e.center, Complex64::new(0.0, 0.0));
        assert!(close(e.radius, delta.tanh(), 1e-16));

        let e = HyperbolicDisk::new(p(0.5, 0.0), 0.5f64.atanh())
            .unwrap()
            .to_euclidean();
        assert!(close(e.center.re, 0.4, 1e-15) && e.center.im == 0.0);
        assert!(close(e.radius, 0.4, 1e-15));

        let z = p(0.3, 0.6);
        let delta = 1e-6;
        let e = HyperbolicDisk::new(z, delta).unwrap().to_euclidean();
        assert!(close(e.radius / (delta * z.defect()), 1.0, 1e-9));
        assert!(HyperbolicDisk::new(z, 0.0).is_err());
    }

    #[test]
    fn precise_defect_matches_direct_formula() {
        let z = Complex64::new(0.4, -0.3);
        let q = Point::new(Complex64::new(0.1, 0.5));
        let img = raw::mobius_point(z, defect_of(z), &q);
        assert!((img.defect - defect_of(img.w)).abs() < 1e-15);
        let edge = Point::from_defect(1e-30, 1.0);
        assert!(edge.w.norm() < 1.0);
        assert_eq!(edge.defect, 1e-30);
    }
}
