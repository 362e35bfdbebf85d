//! Built-in symbol families.

use num_complex::Complex64;

use super::{parser, Symbol, SymbolSource};
use crate::error::{Error, Result};

/// Identifiers accepted by [`builtin`], with parameter meaning:
///
/// * `const:re[,im]`: constant `re + i im`
/// * `monomial:k`: `w^k`
/// * `disk:r`: indicator of `rΔ`, `0 < r < 1`
/// * `abs2`: `|w|^2`
/// * `boundary-power:a`: `(1 - |w|^2)^(-a)`, `0 < a < 1`
/// * `oscillator:k`: `w^k |w| = e^{ikθ} |w|^(k+1)`
pub const BUILTIN_IDS: [&str; 6] = ["const", "monomial", "disk", "abs2", "boundary-power", "oscillator"];

fn arity(id: &'static str, params: &[f64], lo: usize, hi: usize) -> Result<()> {
    if params.len() < lo || params.len() > hi {
        return Err(Error::param(
            "symbol",
            format!("builtin '{id}' takes {lo}..={hi} parameters, got {}", params.len()),
        ));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::param("symbol", format!("builtin '{id}' parameters must be finite")));
    }
    Ok(())
}

fn exponent(id: &'static str, k: f64) -> Result<u32> {
    if k < 0.0 || k.fract() != 0.0 || k > 4096.0 {
        return Err(Error::param("symbol", format!("builtin '{id}' needs an integer k >= 0, got {k}")));
    }
    Ok(k as u32)
}

fn real_text(x: f64) -> String {
    if x < 0.0 {
        format!("(-{:?})", -x)
    } else {
        format!("{x:?}")
    }
}

fn constant_text(c: Complex64) -> String {
    if c.im == 0.0 {
        real_text(c.re)
    } else {
        format!("({} + {}*i)", real_text(c.re), real_text(c.im))
    }
}

/// Looks up a built-in family by identifier.
pub fn builtin(id: &str, params: &[f64]) -> Result<Symbol> {
    let (key, text): (&'static str, String) = match id {
        "const" => {
            arity("const", params, 1, 2)?;
            let c = Complex64::new(params[0], params.get(1).copied().unwrap_or(0.0));
            ("const", constant_text(c))
        }
        "monomial" => {
            arity("monomial", params, 1, 1)?;
            ("monomial", format!("w^{}", exponent("monomial", params[0])?))
        }
        "disk" => {
            arity("disk", params, 1, 1)?;
            let r = params[0];
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::param("symbol", format!("disk radius must lie in (0, 1), got {r}")));
            }
            ("disk", format!("disk({r:?})"))
        }
        "abs2" => {
            arity("abs2", params, 0, 0)?;
            ("abs2", "abs(w)^2".to_string())
        }
        "boundary-power" => {
            arity("boundary-power", params, 1, 1)?;
            let a = params[0];
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::param("symbol", format!("boundary-power exponent must lie in (0, 1), got {a}")));
            }
            ("boundary-power", format!("(1-abs(w)^2)^(-{a:?})"))
        }
        "oscillator" => {
            arity("oscillator", params, 1, 1)?;
            ("oscillator", format!("w^{}*abs(w)", exponent("oscillator", params[0])?))
        }
        other => {
            return Err(Error::param(
                "symbol",
                format!("unknown builtin '{other}'; known: {}", BUILTIN_IDS.join(", ")),
            ))
        }
    };
    let e = parser::parse(&text)?;
    Ok(Symbol::from_expr(
        e,
        SymbolSource::Builtin {
            id: key.to_string(),
            params: params.to_vec(),
        },
    ))
}

/// One representative of each family, plus a few extra parameter choices.
pub fn default_registry() -> Vec<Symbol> {
    let table: [(&str, &[f64]); 12] = [
        ("const", &[1.0]),
        ("const", &[2.0, -1.0]),
        ("monomial", &[1.0]),
        ("monomial", &[2.0]),
        ("monomial", &[3.0]),
        ("disk", &[0.5]),
        ("disk", &[0.8]),
        ("abs2", &[]),
        ("boundary-power", &[0.25]),
        ("boundary-power", &[0.75]),
        ("oscillator", &[1.0]),
        ("oscillator", &[3.0]),
    ];
    table
        .iter()
        .map(|(id, p)| builtin(id, p).expect("registry entries are valid"))
        .collect()
}
