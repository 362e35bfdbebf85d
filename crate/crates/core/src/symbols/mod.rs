//! Symbols: complex functions on the disk with static metadata.
//!
//! User symbols are parsed from a small expression language (see [`parser`]).
//! Built-in families live in [`builtins`]. Composition with a disk
//! automorphism and complex conjugation are wrapper variants, so `f ∘ φ_z`
//! and `f̄` are evaluated without re-parsing.

mod builtins;
mod expr;
pub mod parser;
mod radial;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{raw, Point, UnitDiskPoint};

pub use builtins::{builtin, default_registry, BUILTIN_IDS};
pub use expr::{EvalError, EvalErrorKind, Expr, Func};
pub use parser::ParseError;
pub use radial::{radial_eigenvalues, RadialEigenvalues};

/// Static properties; all conservative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolFlags {
    pub radial: bool,
    pub real_valued: bool,
    pub bounded: bool,
    pub boundary_singular: bool,
    /// `sup |f|` upper bound when `bounded`.
    pub bound: Option<f64>,
}

impl SymbolFlags {
    fn of_expr(e: &Expr) -> Self {
        let bound = e.magnitude_bound();
        Self {
            radial: e.is_radial(),
            real_valued: e.is_real_valued(),
            bounded: bound.is_some(),
            boundary_singular: bound.is_none(),
            bound,
        }
    }
}

/// Where a symbol came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum SymbolSource {
    Builtin { id: String, params: Vec<f64> },
    Expression { text: String },
    Composed { base: Box<SymbolSource>, z: [f64; 2] },
    Conjugate { base: Box<SymbolSource> },
}

#[derive(Debug, Clone)]
enum Body {
    Expr(Arc<Expr>),
    Composed {
        base: Arc<Symbol>,
        z: Complex64,
        zdef: f64,
    },
    Conjugate(Arc<Symbol>),
}

/// Immutable, shareable symbol.
#[derive(Debug, Clone)]
pub struct Symbol {
    source: SymbolSource,
    flags: SymbolFlags,
    breakpoints: Vec<f64>,
    body: Body,
}

impl Symbol {
    /// Parses an expression such as `"(1-abs(w)^2)^(-0.75)"`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::param("symbol", "empty expression"));
        }
        let e = parser::parse(text)?;
        Ok(Self::from_expr(
            e,
            SymbolSource::Expression {
                text: text.to_string(),
            },
        ))
    }

    /// Accepts either `builtin:<id>[:p1,p2,...]` or an expression.
    pub fn from_spec(text: &str) -> Result<Self> {
        match text.strip_prefix("builtin:") {
            Some(rest) => {
                let (id, params) = rest.split_once(':').unwrap_or((rest, ""));
                let params = params
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::param("symbol", format!("bad builtin parameter '{s}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                builtin(id, &params)
            }
            None => Self::parse(text),
        }
    }

    pub(crate) fn from_expr(e: Expr, source: SymbolSource) -> Self {
        let flags = SymbolFlags::of_expr(&e);
        let mut breakpoints = Vec::new();
        e.disk_breakpoints(&mut breakpoints);
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        Self {
            source,
            flags,
            breakpoints,
            body: Body::Expr(Arc::new(e)),
        }
    }

    /// `f ∘ φ_z`.
    pub fn compose(&self, z: UnitDiskPoint) -> Self {
        let zv = z.value();
        let flags = SymbolFlags {
            radial: self.flags.radial && zv == Complex64::new(0.0, 0.0),
            ..self.flags
        };
        Self {
            source: SymbolSource::Composed {
                base: Box::new(self.source.clone()),
                z: [zv.re, zv.im],
            },
            flags,
            breakpoints: Vec::new(),
            body: Body::Composed {
                base: Arc::new(self.clone()),
                z: zv,
                zdef: z.defect(),
            },
        }
    }

    /// `f̄`.
    pub fn conjugate(&self) -> Self {
        Self {
            source: SymbolSource::Conjugate {
                base: Box::new(self.source.clone()),
            },
            flags: self.flags,
            breakpoints: self.breakpoints.clone(),
            body: Body::Conjugate(Arc::new(self.clone())),
        }
    }

    pub fn flags(&self) -> SymbolFlags {
        self.flags
    }

    pub fn source(&self) -> &SymbolSource {
        &self.source
    }

    /// Radial discontinuities in `t = r^2`.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }

    /// The expression tree, for plain (non-wrapped) symbols.
    pub fn expr(&self) -> Option<&Expr> {
        match &self.body {
            Body::Expr(e) => Some(e),
            _ => None,
        }
    }

    /// Stable textual identifier.
    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn eval(&self, p: &Point) -> Result<Complex64, EvalError> {
        match &self.body {
            Body::Expr(e) => e.eval(p),
            Body::Composed { base, z, zdef } => base.eval(&raw::mobius_point(*z, *zdef, p)),
            Body::Conjugate(base) => Ok(base.eval(p)?.conj()),
        }
    }

    /// Evaluation at a checked disk point.
    pub fn eval_at(&self, z: UnitDiskPoint) -> Result<Complex64> {
        Ok(self.eval(&z.point())?)
    }
}

impl fmt::Display for SymbolSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolSource::Builtin { id, params } => {
                write!(f, "builtin:{id}")?;
                if !params.is_empty() {
                    let ps: Vec<String> = params.iter().map(|p| format!("{p:?}")).collect();
                    write!(f, ":{}", ps.join(","))?;
                }
                Ok(())
            }
            SymbolSource::Expression { text } => f.write_str(text),
            SymbolSource::Composed { base, z } => {
                write!(f, "compose({base}, {:?}{:+?}i)", z[0], z[1])
            }
            SymbolSource::Conjugate { base } => write!(f, "conj[{base}]"),
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.source.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitDiskPoint;

    fn at(re: f64, im: f64) -> Point {
        Point::new(Complex64::new(re, im))
    }

    #[test]
    fn spec_examples() {
        let one = Symbol::parse("1").unwrap();
        for p in [at(0.0, 0.0), at(0.3, -0.7), at(-0.99, 0.0)] {
            assert_eq!(one.eval(&p).unwrap(), Complex64::new(1.0, 0.0));
        }
        let a2 = Symbol::parse("abs(w)^2").unwrap();
        assert_eq!(a2.eval(&at(0.5, 0.0)).unwrap(), Complex64::new(0.25, 0.0));

        let s = Symbol::parse("(1-abs(w)^2)^(-0.75)").unwrap();
        let f = s.flags();
        assert!(f.radial && f.boundary_singular && !f.bounded && f.real_valued);
        assert_eq!(s.eval(&at(0.0, 0.0)).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn defect_pattern_uses_exact_defect() {
        let s = Symbol::parse("1-abs(w)^2").unwrap();
        let p = Point::from_defect(1e-14, 0.3);
        assert_eq!(s.eval(&p).unwrap().re, 1e-14);
    }

    #[test]
    fn flags() {
        let cases = [
            ("w", false, false, Some(1.0)),
            ("abs(w)", true, true, Some(1.0)),
            ("disk(0.5)", true, true, Some(1.0)),
            ("w^3*abs(w)", false, false, Some(1.0)),
            ("2 + conj(w)", false, false, Some(3.0)),
            ("exp(abs(w))", true, true, Some(std::f64::consts::E)),
            ("1/w", false, false, None),
            ("log(abs(w))", true, true, None),
            ("w/2", false, false, Some(0.5)),
            ("i*abs(w)", true, false, Some(1.0)),
            ("-5 + 2*disk(0.5)", true, true, Some(7.0)),
        ];
        for (text, radial, real, bound) in cases {
            let f = Symbol::parse(text).unwrap().flags();
            assert_eq!(f.radial, radial, "{text}");
            assert_eq!(f.real_valued, real, "{text}");
            assert_eq!(f.bound, bound, "{text}");
            assert_eq!(f.bounded, bound.is_some());
        }
    }

    #[test]
    fn evaluation_errors() {
        let s = Symbol::parse("log(abs(w))").unwrap();
        let e = s.eval(&at(0.0, 0.0)).unwrap_err();
        assert!(matches!(e.kind, EvalErrorKind::LogOfNonPositive(_)));
        let s = Symbol::parse("1/re(w)").unwrap();
        assert_eq!(s.eval(&at(0.0, 0.5)).unwrap_err().kind, EvalErrorKind::DivisionByZero);
        let s = Symbol::parse("w^0.5").unwrap();
        assert!(matches!(
            s.eval(&at(0.0, 0.5)).unwrap_err().kind,
            EvalErrorKind::BranchCut { .. }
        ));
        assert!(s.eval(&at(0.25, 0.0)).is_ok());
        let s = Symbol::parse("w^i").unwrap();
        assert!(matches!(
            s.eval(&at(0.3, 0.0)).unwrap_err().kind,
            EvalErrorKind::NonRealExponent(_)
        ));
        assert!(Symbol::parse("   ").is_err());
    }

    #[test]
    fn composition_and_conjugation() {
        let z = UnitDiskPoint::from_re_im(0.5, 0.0).unwrap();
        let s = Symbol::parse("w").unwrap().compose(z);
        let v = s.eval(&at(0.25, 0.0)).unwrap();
        assert!((v.re - 0.25 / 0.875).abs() < 1e-15);
        let c = Symbol::parse("w + 2*i").unwrap().conjugate();
        assert_eq!(c.eval(&at(0.1, 0.2)).unwrap(), Complex64::new(0.1, -2.2));
        assert_eq!(c.to_string(), "conj[w + 2*i]");
    }

    #[test]
    fn from_spec_accepts_builtins() {
        let s = Symbol::from_spec("builtin:disk:0.5").unwrap();
        assert_eq!(s.breakpoints(), vec![0.25]);
        assert_eq!(s.to_string(), "builtin:disk:0.5");
        assert!(Symbol::from_spec("builtin:nope").is_err());
        assert!(Symbol::from_spec("builtin:disk:x").is_err());
    }
}
