use std::sync::OnceLock;

use bergman_lab::geometry::{bergman_distance, bergman_kernel, mobius, normalized_kernel, HyperbolicDisk};
use bergman_lab::kernel::{bergman_project, berezin_direct};
use bergman_lab::symbols::parser::parse;
use bergman_lab::symbols::{Expr, Func};
use bergman_lab::toeplitz::{assemble, berezin_from_matrix, TailModel};
use bergman_lab::{DiskQuadrature, Point, QuadratureConfig, Symbol, ToeplitzMatrix, UnitDiskPoint};
use num_complex::Complex64;
use proptest::prelude::*;

fn disk_point(rmax: f64) -> impl Strategy<Value = UnitDiskPoint> {
    (0.0..rmax, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| UnitDiskPoint::from_polar(r, t).unwrap())
}

fn cmp_rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

proptest! {
    #[test]
    fn mobius_is_an_involution(z in disk_point(0.95), w in disk_point(0.95)) {
        let once = UnitDiskPoint::new(mobius(z, w)).unwrap();
        prop_assert!((mobius(z, once) - w.value()).norm() < 1e-12);
    }

    #[test]
    fn kernel_identity_under_mobius(z in disk_point(0.95), v in disk_point(0.95)) {
        let pz = UnitDiskPoint::new(mobius(z, v)).unwrap();
        let lhs = bergman_kernel(z, pz) * normalized_kernel(z, v) * (1.0 - z.value().norm_sqr());
        prop_assert!((lhs - 1.0).norm() < 1e-12, "{lhs}");
    }

    #[test]
    fn defect_identity(z in disk_point(0.99), w in disk_point(0.99)) {
        let phi = UnitDiskPoint::new(mobius(z, w)).unwrap();
        let (zv, wv) = (z.value(), w.value());
        let want = z.defect() * w.defect() / (1.0 - zv.conj() * wv).norm_sqr();
        prop_assert!((phi.defect() - want).abs() <= 1e-12 * want.max(1e-3));
    }

    #[test]
    fn metric_is_mobius_invariant(a in disk_point(0.9), z in disk_point(0.9), w in disk_point(0.9)) {
        let (za, wa) = (UnitDiskPoint::new(mobius(a, z)).unwrap(), UnitDiskPoint::new(mobius(a, w)).unwrap());
        let d = bergman_distance(z, w);
        prop_assert!((bergman_distance(za, wa) - d).abs() <= 1e-12 * d.max(1.0));
        prop_assert!(bergman_distance(z, w) <= bergman_distance(z, a) + bergman_distance(a, w) + 1e-12);
    }

    #[test]
    fn hyperbolic_disk_is_a_euclidean_disk(c in disk_point(0.9), w in disk_point(0.99), delta in 0.05f64..2.0) {
        let disk = HyperbolicDisk::new(c, delta).unwrap();
        let e = disk.to_euclidean();
        let gap = (w.value() - e.center).norm() - e.radius;
        prop_assume!(gap.abs() > 1e-9);
        prop_assert_eq!(disk.contains(w), gap < 0.0);
    }
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        Just(Expr::W),
        Just(Expr::I),
        (0.0f64..1e3).prop_map(Expr::Num),
        (0u32..20).prop_map(|k| Expr::Num(k as f64)),
        // the radius of disk() must be a constant in (0, 1)
        (0.01f64..0.99).prop_map(|r| Expr::Call(Func::Disk, Box::new(Expr::Num(r)))),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    let funcs = [Func::Abs, Func::Re, Func::Im, Func::Conj, Func::Exp, Func::Log];
    leaf().prop_recursive(4, 24, 2, move |inner| {
        let b = |e: Expr| Box::new(e);
        prop_oneof![
            inner.clone().prop_map(move |a| Expr::Neg(b(a))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Add(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Sub(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Mul(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Div(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Pow(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::PowFn(b(x), b(y))),
            (proptest::sample::select(funcs.to_vec()), inner).prop_map(move |(f, a)| Expr::Call(f, b(a))),
        ]
    })
}

proptest! {
    #[test]
    fn printed_expressions_parse_back(e in expr()) {
        let text = e.to_string();
        prop_assert_eq!(parse(&text).unwrap(), e, "{}", text);
    }

    #[test]
    fn flags_are_sound(e in expr(), w in disk_point(0.999)) {
        let f = Symbol::parse(&e.to_string()).unwrap();
        let flags = f.flags();
        if let Ok(v) = f.eval(&w.point()) {
            prop_assume!(v.is_finite());
            if let Some(bound) = flags.bound {
                prop_assert!(v.norm() <= bound * (1.0 + 1e-12) + 1e-300, "{} > {bound}", v.norm());
            }
            if flags.real_valued {
                prop_assert!(v.im == 0.0, "{v}");
            }
        }
    }
}

const N: usize = 12;

fn rule() -> &'static DiskQuadrature {
    static RULE: OnceLock<DiskQuadrature> = OnceLock::new();
    RULE.get_or_init(|| {
        let probe = Symbol::parse("disk(0.3) + disk(0.6)").unwrap();
        QuadratureConfig::default().matrix_rule(&probe, N).unwrap()
    })
}

/// Smooth and piecewise test symbols whose breakpoints lie on the shared rule.
fn test_symbol() -> impl Strategy<Value = String> {
    proptest::sample::select(vec![
        "1", "w", "conj(w)", "abs(w)^2", "disk(0.3)", "disk(0.6)", "re(w)*im(w)", "exp(i*w)", "w^2*conj(w)",
    ])
    .prop_map(str::to_string)
}

fn matrix(text: &str) -> ToeplitzMatrix {
    assemble(&Symbol::parse(text).unwrap(), N, rule()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn berezin_is_linear(f in test_symbol(), g in test_symbol(), a in -2.0f64..2.0, b in -2.0f64..2.0, z in disk_point(0.6)) {
        let combined = format!("{a:?}*({f}) + {b:?}*({g})");
        let lhs = berezin_from_matrix(&matrix(&combined), z, TailModel::Truncated);
        let rhs = a * berezin_from_matrix(&matrix(&f), z, TailModel::Truncated)
            + b * berezin_from_matrix(&matrix(&g), z, TailModel::Truncated);
        prop_assert!(cmp_rel(lhs, rhs) < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn berezin_of_nonnegative_symbol_is_nonnegative(f in test_symbol(), z in disk_point(0.9)) {
        let g = Symbol::parse(&format!("abs({f})")).unwrap();
        let b = berezin_direct(rule(), &g, z).unwrap();
        prop_assert!(b.re >= -1e-14 && b.im.abs() < 1e-12, "{b}");
    }

    #[test]
    fn conjugate_symbol_gives_adjoint(f in test_symbol()) {
        let a = matrix(&f);
        let b = matrix(&format!("conj({f})"));
        let diff = (b.entries() - a.adjoint().entries()).camax();
        prop_assert!(diff < 1e-13, "{diff}");
    }

    #[test]
    fn projection_reproduces_analytic_polynomials(
        coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
        z in disk_point(0.8),
    ) {
        let c: Vec<Complex64> = coeffs.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let h = |w: Complex64| c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, ck| acc * w + ck);
        let got = bergman_project(rule(), |p: &Point| Ok(h(p.w)), z).unwrap();
        prop_assert!(cmp_rel(got, h(z.value())) < 1e-10, "{got} vs {}", h(z.value()));
    }
}
