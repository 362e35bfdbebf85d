//! Tensor quadrature on the unit disk for the normalized area measure.
//!
//! The radial variable is `t = r^2`, so that `dλ = dt dθ / 2π` and radial
//! integrals become one-dimensional integrals over `[0, 1]`. Each radial
//! panel carries a Gauss–Legendre rule; the angular rule is the uniform
//! trapezoid rule, exact for trigonometric polynomials of degree `< n_angular`.
//!
//! Boundary-singular integrands get geometrically graded panels accumulating
//! at `t = 1` (ratio 1/2). The last panel `[1 - h, 1]` uses the substitution
//! `1 - t = h s^4` before applying Gauss–Legendre in `s`; it integrates
//! `(1 - t)^(-α)` times a polynomial exactly for `α ∈ {1/4, 1/2, 3/4}` and
//! accurately for the rest of `(0, 1)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::par;
use crate::sum::{Compensated, CompensatedComplex};
use crate::symbols::Symbol;

const ENDPOINT_POWER: i32 = 4;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_legendre needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[m - 1] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let (pn, pn1) = if n == 1 { (z, 1.0) } else { (p1, p0) };
    let d = n as f64 * (z * pn - pn1) / (z * z - 1.0);
    (pn, d)
}

/// Radial panel layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSpec {
    /// Extra breakpoints in `t = r^2`, each in `[0, 1)`.
    pub breakpoints: Vec<f64>,
    /// Number of geometric panels accumulating at `t = 1`; `0` disables grading.
    pub graded_panels: usize,
}

impl PanelSpec {
    pub fn uniform() -> Self {
        Self {
            breakpoints: Vec::new(),
            graded_panels: 0,
        }
    }

    pub fn graded(panels: usize) -> Self {
        Self {
            breakpoints: Vec::new(),
            graded_panels: panels,
        }
    }

    pub fn with_breakpoints(mut self, bps: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(bps);
        self
    }
}

/// One radial node: `t = r^2`, the exact defect `1 - t`, and its weight in `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialNode {
    pub t: f64,
    pub defect: f64,
    pub weight: f64,
}

impl RadialNode {
    #[inline]
    pub fn radius(&self) -> f64 {
        self.t.sqrt()
    }
}

/// Nodes and weights for `∫_Δ f dλ`.
#[derive(Clone)]
pub struct DiskQuadrature {
    radial: Vec<RadialNode>,
    n_radial: usize,
    n_angular: usize,
    declared_degree: usize,
    panels: Vec<f64>,
    graded: bool,
    cos_sin: Vec<(f64, f64)>,
}

impl fmt::Debug for DiskQuadrature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiskQuadrature")
            .field("fingerprint", &self.fingerprint())
            .field("nodes", &self.len())
            .finish()
    }
}

/// Builds the tensor rule: `n_radial` Gauss–Legendre nodes per panel times
/// `n_angular` equispaced angles.
pub fn build_rule(n_radial: usize, n_angular: usize, panels: &PanelSpec) -> Result<DiskQuadrature> {
    if n_radial == 0 {
        return Err(Error::param("n_radial", "must be at least 1"));
    }
    if n_angular == 0 {
        return Err(Error::param("n_angular", "must be at least 1"));
    }
    let mut bps = vec![0.0];
    for &b in &panels.breakpoints {
        if !(0.0..1.0).contains(&b) || !b.is_finite() {
            return Err(Error::param(
                "breakpoints",
                format!("breakpoint {b} outside [0, 1)"),
            ));
        }
        bps.push(b);
    }
    for k in 1..=panels.graded_panels {
        bps.push(1.0 - 0.5f64.powi(k as i32));
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let (x, w) = gauss_legendre(n_radial);
    let mut radial = Vec::with_capacity(bps.len() * n_radial);
    let graded = panels.graded_panels > 0;
    for (i, &a) in bps.iter().enumerate() {
        let last = i + 1 == bps.len();
        if last && graded {
            let h = 1.0 - a;
            for (xi, wi) in x.iter().zip(&w) {
                let s = 0.5 * (xi + 1.0);
                let u = h * s.powi(ENDPOINT_POWER);
                let jac = h * f64::from(ENDPOINT_POWER) * s.powi(ENDPOINT_POWER - 1);
                radial.push(RadialNode {
                    t: 1.0 - u,
                    defect: u,
                    weight: 0.5 * wi * jac,
                });
            }
            // ascending t
            let start = radial.len() - n_radial;
            radial[start..].reverse();
        } else {
            let b = if last { 1.0 } else { bps[i + 1] };
            let half = 0.5 * (b - a);
            let da = 1.0 - a;
            for (xi, wi) in x.iter().zip(&w) {
                let off = half * (xi + 1.0);
                radial.push(RadialNode {
                    t: a + off,
                    defect: da - off,
                    weight: half * wi,
                });
            }
        }
    }
    let cos_sin = (0..n_angular)
        .map(|j| {
            let th = 2.0 * PI * j as f64 / n_angular as f64;
            (th.cos(), th.sin())
        })
        .collect();
    Ok(DiskQuadrature {
        radial,
        n_radial,
        n_angular,
        declared_degree: (n_angular - 1).min(2 * n_radial - 1),
        panels: bps,
        graded,
        cos_sin,
    })
}

impl DiskQuadrature {
    pub fn n_radial(&self) -> usize {
        self.n_radial
    }

    pub fn n_angular(&self) -> usize {
        self.n_angular
    }

    /// Largest monomial degree integrated exactly on every panel.
    pub fn declared_degree(&self) -> usize {
        self.declared_degree
    }

    /// Panel breakpoints in `t`, starting at 0.
    pub fn panels(&self) -> &[f64] {
        &self.panels
    }

    pub fn is_graded(&self) -> bool {
        self.graded
    }

    pub fn radial_nodes(&self) -> &[RadialNode] {
        &self.radial
    }

    pub fn len(&self) -> usize {
        self.radial.len() * self.n_angular
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fingerprint(&self) -> String {
        let bps: Vec<String> = self.panels.iter().map(|b| format!("{b:.6}")).collect();
        format!(
            "gl{}x{}|panels[{}]{}",
            self.n_radial,
            self.n_angular,
            bps.join(","),
            if self.graded { "|graded" } else { "" }
        )
    }

    #[inline]
    fn ring_point(&self, node: &RadialNode, j: usize) -> Point {
        let r = node.radius().min(1.0 - f64::EPSILON / 2.0);
        let (c, s) = self.cos_sin[j];
        Point {
            w: Complex64::new(r * c, r * s),
            defect: node.defect,
        }
    }

    /// All nodes as `(point, weight)`, rings in ascending radius.
    pub fn nodes(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        let inv = 1.0 / self.n_angular as f64;
        self.radial.iter().flat_map(move |node| {
            (0..self.n_angular).map(move |j| (self.ring_point(node, j), node.weight * inv))
        })
    }

    /// `Σ weight_i f(point_i)` with compensated summation in a fixed order.
    pub fn try_integrate<F>(&self, f: F) -> Result<Complex64>
    where
        F: Fn(&Point) -> Result<Complex64> + Sync + Send,
    {
        let na = self.n_angular;
        let rings = par::try_map_range(self.radial.len(), |i| {
            let node = &self.radial[i];
            let mut acc = CompensatedComplex::default();
            for j in 0..na {
                let p = self.ring_point(node, j);
                let v = f(&p)?;
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFiniteIntegrand {
                        index: i * na + j,
                        point: p.w,
                        value: v,
                    });
                }
                acc.add(v);
            }
            Ok(acc.value() * node.weight)
        })?;
        let mut total = CompensatedComplex::default();
        rings.into_iter().for_each(|r| total.add(r));
        Ok(total.value() / na as f64)
    }

    pub fn integrate<F>(&self, f: F) -> Result<Complex64>
    where
        F: Fn(&Point) -> Complex64 + Sync + Send,
    {
        self.try_integrate(|p| Ok(f(p)))
    }

    /// Real-valued convenience wrapper around [`DiskQuadrature::integrate`].
    pub fn integrate_real<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&Point) -> f64 + Sync + Send,
    {
        Ok(self.integrate(|p| Complex64::new(f(p), 0.0))?.re)
    }

    /// `(∫ |f|^p dλ)^(1/p)`.
    pub fn try_lp_norm<F>(&self, f: F, p: f64) -> Result<f64>
    where
        F: Fn(&Point) -> Result<Complex64> + Sync + Send,
    {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::param("p", format!("must be >= 1, got {p}")));
        }
        let s = self.try_integrate(|pt| Ok(Complex64::new(f(pt)?.norm().powf(p), 0.0)))?;
        Ok(s.re.max(0.0).powf(1.0 / p))
    }

    pub fn lp_norm<F>(&self, f: F, p: f64) -> Result<f64>
    where
        F: Fn(&Point) -> Complex64 + Sync + Send,
    {
        self.try_lp_norm(|pt| Ok(f(pt)), p)
    }

    /// One-dimensional `∫_0^1 g(t, 1 - t) dt` on the radial rule.
    pub fn integrate_radial<G>(&self, g: G) -> f64
    where
        G: Fn(f64, f64) -> f64,
    {
        let mut acc = Compensated::default();
        for n in &self.radial {
            acc.add(n.weight * g(n.t, n.defect));
        }
        acc.value()
    }

    /// Angular Fourier coefficients per ring:
    /// `F_k(r_i) = (1/n_angular) Σ_j f(r_i e^{iθ_j}) e^{ikθ_j}` for
    /// `|k| < max_freq`, stored at index `k + max_freq - 1`.
    pub fn angular_spectrum<F>(&self, f: F, max_freq: usize) -> Result<Vec<Vec<Complex64>>>
    where
        F: Fn(&Point) -> Result<Complex64> + Sync + Send,
    {
        let na = self.n_angular;
        if max_freq == 0 {
            return Ok(vec![Vec::new(); self.radial.len()]);
        }
        if 2 * max_freq - 1 > na {
            return Err(Error::InsufficientAngularResolution {
                n_angular: na,
                required: 2 * max_freq - 2,
            });
        }
        let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_inverse(na);
        let inv = 1.0 / na as f64;
        par::try_map_range(self.radial.len(), |i| {
            let node = &self.radial[i];
            let mut buf = Vec::with_capacity(na);
            for j in 0..na {
                let p = self.ring_point(node, j);
                let v = f(&p)?;
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFiniteIntegrand {
                        index: i * na + j,
                        point: p.w,
                        value: v,
                    });
                }
                buf.push(v);
            }
            fft.process(&mut buf);
            let k0 = max_freq as isize - 1;
            Ok((-k0..=k0)
                .map(|k| buf[k.rem_euclid(na as isize) as usize] * inv)
                .collect())
        })
    }

    /// `Σ weight_i f(p_i, F(p_i))` with `F(w) = Σ_n coeffs[n] w^n`; `F` is
    /// evaluated ring by ring with one inverse FFT each.
    pub fn try_integrate_series<F>(&self, coeffs: &[Complex64], f: F) -> Result<Complex64>
    where
        F: Fn(&Point, Complex64) -> Result<Complex64> + Sync + Send,
    {
        let na = self.n_angular;
        if coeffs.len() > na {
            return Err(Error::InsufficientAngularResolution {
                n_angular: na,
                required: coeffs.len() - 1,
            });
        }
        let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_inverse(na);
        let rings = par::try_map_range(self.radial.len(), |i| {
            let node = &self.radial[i];
            let r = node.radius();
            let mut buf = vec![Complex64::new(0.0, 0.0); na];
            let mut rn = 1.0;
            for (b, c) in buf.iter_mut().zip(coeffs) {
                *b = c * rn;
                rn *= r;
            }
            fft.process(&mut buf);
            let mut acc = CompensatedComplex::default();
            for (j, series) in buf.iter().enumerate() {
                let p = self.ring_point(node, j);
                let v = f(&p, *series)?;
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFiniteIntegrand {
                        index: i * na + j,
                        point: p.w,
                        value: v,
                    });
                }
                acc.add(v);
            }
            Ok(acc.value() * node.weight)
        })?;
        let mut total = CompensatedComplex::default();
        rings.into_iter().for_each(|r| total.add(r));
        Ok(total.value() / na as f64)
    }

    /// `∫ g w̄^k dλ` for `k < n`, via one forward FFT per ring.
    pub fn conjugate_moments<G>(&self, g: G, n: usize) -> Result<Vec<Complex64>>
    where
        G: Fn(&Point) -> Result<Complex64> + Sync + Send,
    {
        let na = self.n_angular;
        if n > na {
            return Err(Error::InsufficientAngularResolution {
                n_angular: na,
                required: n - 1,
            });
        }
        let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(na);
        let rings = par::try_map_range(self.radial.len(), |i| {
            let node = &self.radial[i];
            let mut buf = Vec::with_capacity(na);
            for j in 0..na {
                let p = self.ring_point(node, j);
                let v = g(&p)?;
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFiniteIntegrand {
                        index: i * na + j,
                        point: p.w,
                        value: v,
                    });
                }
                buf.push(v);
            }
            fft.process(&mut buf);
            buf.truncate(n);
            Ok(buf)
        })?;
        let powers = radial_powers(self, n);
        let inv = 1.0 / na as f64;
        Ok((0..n)
            .map(|k| {
                let mut acc = CompensatedComplex::default();
                for (i, ring) in rings.iter().enumerate() {
                    acc.add(ring[k] * (self.radial[i].weight * powers[i][k]));
                }
                acc.value() * inv
            })
            .collect())
    }

    /// Warns (through `log`) when a kernel peaked near `z/|z|` is under-resolved
    /// by the angular rule.
    pub fn check_peak_resolution(&self, z: Complex64, context: &str) -> bool {
        let aliasing = z.norm().powi(self.n_angular as i32) / defect_of_abs(z).powi(2);
        let ok = aliasing < 1e-8;
        if !ok {
            log::warn!(
                "{context}: {} angular nodes under-resolve the kernel peak at |z| = {:.4} (aliasing estimate {aliasing:.2e})",
                self.n_angular,
                z.norm()
            );
        }
        ok
    }
}

fn defect_of_abs(z: Complex64) -> f64 {
    crate::geometry::defect_of(z)
}

/// Rule sizes; defaults `n_radial = 64` per panel, `n_angular = 256`,
/// 24 graded panels for boundary-singular symbols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub n_radial: usize,
    pub n_angular: usize,
    pub graded_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            n_radial: 64,
            n_angular: 256,
            graded_panels: 24,
        }
    }
}

impl QuadratureConfig {
    pub fn new(n_radial: usize, n_angular: usize) -> Self {
        Self {
            n_radial,
            n_angular,
            ..Self::default()
        }
    }

    /// Doubles both resolutions.
    pub fn refined(&self) -> Self {
        Self {
            n_radial: 2 * self.n_radial,
            n_angular: 2 * self.n_angular,
            graded_panels: self.graded_panels,
        }
    }

    /// Smallest power-of-two angular count that resolves frequencies up to
    /// `2n - 2`, or the configured count if larger.
    pub fn angular_for_order(&self, n: usize) -> usize {
        self.n_angular.max((2 * n).next_power_of_two())
    }

    /// Angular count adequate for a kernel peaked at radius `rmax`.
    pub fn angular_for_radius(&self, rmax: f64) -> usize {
        let needed = if rmax <= 0.0 {
            1.0
        } else {
            // rmax^n / (1 - rmax^2)^2 < 1e-10
            let d = 1.0 - rmax * rmax;
            ((1e-10 * d * d).ln() / rmax.ln()).ceil()
        };
        self.n_angular.max((needed.max(1.0) as usize).next_power_of_two())
    }

    /// Rule for integrals of `symbol` times smooth factors.
    pub fn rule_for(&self, symbol: &Symbol) -> Result<DiskQuadrature> {
        self.rule_with(symbol, self.n_angular)
    }

    pub fn rule_with(&self, symbol: &Symbol, n_angular: usize) -> Result<DiskQuadrature> {
        let graded = if symbol.flags().boundary_singular {
            self.graded_panels
        } else {
            0
        };
        let spec = PanelSpec {
            breakpoints: symbol.breakpoints(),
            graded_panels: graded,
        };
        build_rule(self.n_radial, n_angular, &spec)
    }

    /// Rule for an order-`n` moment table of `symbol`: enough angles for
    /// frequency `2n - 2`, and enough radial nodes for `t^(n-1)` on one panel.
    pub fn matrix_rule(&self, symbol: &Symbol, n: usize) -> Result<DiskQuadrature> {
        let n_radial = self.n_radial.max(n.div_ceil(2) + 1);
        let graded = if symbol.flags().boundary_singular {
            self.graded_panels
        } else {
            0
        };
        let spec = PanelSpec {
            breakpoints: symbol.breakpoints(),
            graded_panels: graded,
        };
        build_rule(n_radial, self.angular_for_order(n), &spec)
    }

    /// Rule with boundary grading regardless of the symbol.
    pub fn graded_rule(&self, breakpoints: Vec<f64>, n_angular: usize) -> Result<DiskQuadrature> {
        build_rule(
            self.n_radial,
            n_angular,
            &PanelSpec {
                breakpoints,
                graded_panels: self.graded_panels.max(1),
            },
        )
    }
}

/// `M[a][b] = ∫ f w^a w̄^b dλ` for `0 <= a, b < N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    order: usize,
    entries: Vec<Complex64>,
}

impl MomentTable {
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> Complex64 {
        self.entries[a * self.order + b]
    }
}

/// Powers `r_i^d`, `d < len`, for every radial node.
pub(crate) fn radial_powers(rule: &DiskQuadrature, len: usize) -> Vec<Vec<f64>> {
    rule.radial
        .iter()
        .map(|n| {
            let r = n.radius();
            let mut v = Vec::with_capacity(len);
            let mut acc = 1.0;
            for _ in 0..len {
                v.push(acc);
                acc *= r;
            }
            v
        })
        .collect()
}

/// Moment table of `symbol` via per-ring angular FFTs.
pub fn monomial_moments(rule: &DiskQuadrature, symbol: &Symbol, n: usize) -> Result<MomentTable> {
    if n == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    let spectrum = rule.angular_spectrum(|p| Ok(symbol.eval(p)?), n)?;
    let powers = radial_powers(rule, 2 * n - 1);
    let weights: Vec<f64> = rule.radial.iter().map(|r| r.weight).collect();
    let rows = par::map_range(n, |a| {
        (0..n)
            .map(|b| {
                let k = a + n - 1 - b; // index of frequency a - b
                let d = a + b;
                let mut acc = CompensatedComplex::default();
                for i in 0..weights.len() {
                    acc.add(spectrum[i][k] * (weights[i] * powers[i][d]));
                }
                acc.value()
            })
            .collect::<Vec<_>>()
    });
    Ok(MomentTable {
        order: n,
        entries: rows.into_iter().flatten().collect(),
    })
}
