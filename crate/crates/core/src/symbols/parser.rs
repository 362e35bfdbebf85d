//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' factor)?
//! base   := number | 'i' | 'w' | func '(' expr ')' | '(' expr ')' | '-' base
//! ```
//!
//! `pow(a, b)` is also accepted and kept distinct from `a ^ b`.

use thiserror::Error;

use super::expr::{Expr, Func};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn err(position: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        position,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .map_err(|_| err(start, format!("malformed number '{text}'")))?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Sym(c), i));
            i += 1;
        } else {
            return Err(err(i, format!("unexpected character '{c}'")));
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

impl Lexer {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn here(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(err(self.here(), format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.eat('^') {
            Ok(Expr::Pow(Box::new(base), Box::new(self.factor()?)))
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let at = self.here();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Sym('-') => Ok(Expr::Neg(Box::new(self.base()?))),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "w" => Ok(Expr::W),
                "i" => Ok(Expr::I),
                "pow" => {
                    self.expect('(')?;
                    let a = self.expr()?;
                    self.expect(',')?;
                    let b = self.expr()?;
                    self.expect(')')?;
                    Ok(Expr::PowFn(Box::new(a), Box::new(b)))
                }
                _ => {
                    let func = Func::from_name(&name)
                        .ok_or_else(|| err(at, format!("unknown identifier '{name}'")))?;
                    self.expect('(')?;
                    let a = self.expr()?;
                    self.expect(')')?;
                    if func == Func::Disk {
                        match a.constant_value() {
                            Some(r) if r.im == 0.0 && r.re > 0.0 => {}
                            _ => return Err(err(at, "disk radius must be a positive real constant")),
                        }
                    }
                    Ok(Expr::Call(func, Box::new(a)))
                }
            },
            Tok::End => Err(err(at, "unexpected end of input")),
            Tok::Sym(c) => Err(err(at, format!("unexpected '{c}'"))),
        }
    }
}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut lx = Lexer {
        toks: lex(src)?,
        pos: 0,
    };
    let e = lx.expr()?;
    if *lx.peek() != Tok::End {
        return Err(err(lx.here(), "trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let e = parse("1 + 2*w^2").unwrap();
        assert_eq!(e.to_string(), "(1.0 + (2.0 * (w)^(2.0)))");
        let e = parse("2^3^2").unwrap();
        assert_eq!(e.to_string(), "(2.0)^((3.0)^(2.0))");
        let e = parse("-w^2").unwrap();
        assert_eq!(e.to_string(), "(-(w))^(2.0)");
        let e = parse("3*i + pow(w, 2)").unwrap();
        assert_eq!(e.to_string(), "((3.0 * i) + pow(w, 2.0))");
        assert!(parse("3i").is_err());
        assert_eq!(parse("1e-3").unwrap(), Expr::Num(1e-3));
    }

    #[test]
    fn errors_carry_position() {
        let e = parse("1 + foo(w)").unwrap_err();
        assert_eq!(e.position, 4);
        assert!(parse("(w").is_err());
        assert!(parse("w w").is_err());
        assert!(parse("").is_err());
        assert!(parse("disk(w)").is_err());
        assert!(parse("disk(-1)").is_err());
        assert!(parse("w $ 2").is_err());
    }
}
