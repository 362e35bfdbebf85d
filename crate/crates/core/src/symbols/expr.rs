use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Abs,
    Re,
    Im,
    Conj,
    Exp,
    Log,
    Disk,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Re => "re",
            Func::Im => "im",
            Func::Conj => "conj",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Disk => "disk",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "abs" => Func::Abs,
            "re" => Func::Re,
            "im" => Func::Im,
            "conj" => Func::Conj,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "disk" => Func::Disk,
            _ => return None,
        })
    }
}

/// Symbol expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    I,
    W,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// `a ^ b`
    Pow(Box<Expr>, Box<Expr>),
    /// `pow(a, b)`
    PowFn(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalErrorKind {
    #[error("log of nonpositive real {0}")]
    LogOfNonPositive(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-real exponent {0}")]
    NonRealExponent(Complex64),
    #[error("non-integer exponent {exponent} needs a positive real base, got {base}")]
    BranchCut { base: Complex64, exponent: f64 },
    #[error("disk radius must be a real constant, got {0}")]
    BadDiskRadius(Complex64),
}

/// Evaluation failure at a specific point.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at w = {at}")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub at: Complex64,
}

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn is_defect_pattern(a: &Expr, b: &Expr) -> bool {
    // 1 - abs(w)^2
    matches!(a, Expr::Num(x) if *x == 1.0)
        && matches!(b, Expr::Pow(base, e)
            if matches!(**e, Expr::Num(x) if x == 2.0)
            && matches!(**base, Expr::Call(Func::Abs, ref inner) if **inner == Expr::W))
}

fn power(base: Complex64, exponent: Complex64, at: Complex64) -> Result<Complex64, EvalError> {
    let err = |kind| EvalError { kind, at };
    if exponent.im != 0.0 {
        return Err(err(EvalErrorKind::NonRealExponent(exponent)));
    }
    let e = exponent.re;
    if e.fract() == 0.0 && e.abs() < 2f64.powi(31) {
        let n = e as i32;
        if n < 0 && base == ZERO {
            return Err(err(EvalErrorKind::DivisionByZero));
        }
        if base.im == 0.0 {
            return Ok(Complex64::new(base.re.powi(n), 0.0));
        }
        return Ok(base.powi(n));
    }
    if base.im != 0.0 || base.re < 0.0 {
        return Err(err(EvalErrorKind::BranchCut { base, exponent: e }));
    }
    if base.re == 0.0 {
        return if e > 0.0 {
            Ok(ZERO)
        } else {
            Err(err(EvalErrorKind::DivisionByZero))
        };
    }
    Ok(Complex64::new(base.re.powf(e), 0.0))
}

impl Expr {
    pub fn eval(&self, p: &Point) -> Result<Complex64, EvalError> {
        let at = p.w;
        Ok(match self {
            Expr::Num(x) => Complex64::new(*x, 0.0),
            Expr::I => Complex64::new(0.0, 1.0),
            Expr::W => p.w,
            Expr::Neg(a) => -a.eval(p)?,
            Expr::Add(a, b) => a.eval(p)? + b.eval(p)?,
            Expr::Sub(a, b) => {
                if is_defect_pattern(a, b) {
                    Complex64::new(p.defect, 0.0)
                } else {
                    a.eval(p)? - b.eval(p)?
                }
            }
            Expr::Mul(a, b) => {
                let (x, y) = (a.eval(p)?, b.eval(p)?);
                if x.im == 0.0 && y.im == 0.0 {
                    Complex64::new(x.re * y.re, 0.0)
                } else {
                    x * y
                }
            }
            Expr::Div(a, b) => {
                let d = b.eval(p)?;
                if d == ZERO {
                    return Err(EvalError {
                        kind: EvalErrorKind::DivisionByZero,
                        at,
                    });
                }
                let n = a.eval(p)?;
                if n.im == 0.0 && d.im == 0.0 {
                    Complex64::new(n.re / d.re, 0.0)
                } else {
                    n / d
                }
            }
            Expr::Pow(a, b) | Expr::PowFn(a, b) => power(a.eval(p)?, b.eval(p)?, at)?,
            Expr::Call(f, a) => match f {
                Func::Disk => {
                    let r = a.eval(p)?;
                    if r.im != 0.0 {
                        return Err(EvalError {
                            kind: EvalErrorKind::BadDiskRadius(r),
                            at,
                        });
                    }
                    let r = r.re.max(0.0);
                    if p.norm_sqr() < r * r {
                        ONE
                    } else {
                        ZERO
                    }
                }
                Func::Abs => {
                    let v = a.eval(p)?;
                    Complex64::new(v.norm(), 0.0)
                }
                Func::Re => Complex64::new(a.eval(p)?.re, 0.0),
                Func::Im => Complex64::new(a.eval(p)?.im, 0.0),
                Func::Conj => a.eval(p)?.conj(),
                Func::Exp => {
                    let v = a.eval(p)?;
                    if v.im == 0.0 {
                        Complex64::new(v.re.exp(), 0.0)
                    } else {
                        v.exp()
                    }
                }
                Func::Log => {
                    let v = a.eval(p)?;
                    if v.im == 0.0 {
                        if v.re <= 0.0 {
                            return Err(EvalError {
                                kind: EvalErrorKind::LogOfNonPositive(v.re),
                                at,
                            });
                        }
                        Complex64::new(v.re.ln(), 0.0)
                    } else {
                        v.ln()
                    }
                }
            },
        })
    }

    /// `disk(r)` depends on `w` even though its argument does not.
    pub fn contains_w(&self) -> bool {
        match self {
            Expr::W | Expr::Call(Func::Disk, _) => true,
            Expr::Num(_) | Expr::I => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.contains_w(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b)
            | Expr::PowFn(a, b) => a.contains_w() || b.contains_w(),
        }
    }

    /// Value of a `w`-free subexpression.
    pub fn constant_value(&self) -> Option<Complex64> {
        if self.contains_w() {
            return None;
        }
        self.eval(&Point::new(ZERO)).ok()
    }

    /// True when `w` occurs only inside `abs(...)`.
    pub fn is_radial(&self) -> bool {
        match self {
            Expr::W => false,
            Expr::Num(_) | Expr::I => true,
            Expr::Call(Func::Abs, _) => true,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_radial(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b)
            | Expr::PowFn(a, b) => a.is_radial() && b.is_radial(),
        }
    }

    pub fn is_real_valued(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::I | Expr::W => false,
            Expr::Call(Func::Abs | Func::Re | Func::Im | Func::Disk, _) => true,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_real_valued(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b)
            | Expr::PowFn(a, b) => a.is_real_valued() && b.is_real_valued(),
        }
    }

    /// Conservative upper bound on `|f|` over the disk, `None` if unproven.
    pub fn magnitude_bound(&self) -> Option<f64> {
        if let Some(c) = self.constant_value() {
            return Some(c.norm());
        }
        match self {
            Expr::Num(x) => Some(x.abs()),
            Expr::I | Expr::W => Some(1.0),
            Expr::Neg(a) => a.magnitude_bound(),
            // 1 - abs(w)^2 lies in (0, 1]
            Expr::Sub(a, b) if is_defect_pattern(a, b) => Some(1.0),
            Expr::Add(a, b) | Expr::Sub(a, b) => Some(a.magnitude_bound()? + b.magnitude_bound()?),
            Expr::Mul(a, b) => Some(a.magnitude_bound()? * b.magnitude_bound()?),
            Expr::Div(a, b) => {
                let d = b.constant_value()?;
                if d.norm() == 0.0 {
                    return None;
                }
                Some(a.magnitude_bound()? / d.norm())
            }
            Expr::Pow(a, b) | Expr::PowFn(a, b) => {
                let e = b.constant_value()?;
                if e.im != 0.0 || e.re < 0.0 {
                    return None;
                }
                Some(a.magnitude_bound()?.powf(e.re))
            }
            Expr::Call(f, a) => match f {
                Func::Disk => Some(1.0),
                Func::Abs | Func::Re | Func::Im | Func::Conj => a.magnitude_bound(),
                Func::Exp => Some(a.magnitude_bound()?.exp()),
                Func::Log => None,
            },
        }
    }

    /// Radial discontinuities `r^2` of `disk(r)` indicators, in `(0, 1)`.
    pub fn disk_breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            Expr::Call(Func::Disk, a) => {
                if let Some(r) = a.constant_value() {
                    let t = r.re * r.re;
                    if r.re > 0.0 && t < 1.0 {
                        out.push(t);
                    }
                }
                a.disk_breakpoints(out);
            }
            Expr::Num(_) | Expr::I | Expr::W => {}
            Expr::Neg(a) | Expr::Call(_, a) => a.disk_breakpoints(out),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b)
            | Expr::PowFn(a, b) => {
                a.disk_breakpoints(out);
                b.disk_breakpoints(out);
            }
        }
    }
}

/// Fully parenthesized form; parsing it back yields the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x:?}"),
            Expr::I => f.write_str("i"),
            Expr::W => f.write_str("w"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a})^({b})"),
            Expr::PowFn(a, b) => write!(f, "pow({a}, {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
