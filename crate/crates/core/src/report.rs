//! Diagnostics reports and their deterministic serialization.
//!
//! JSON output has sorted keys and prints every float in `{:.16e}` form
//! (17 significant digits), so emitting, parsing and re-emitting is exact.
//! CSV output flattens `values` under a header that is the sorted union of
//! the row keys.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    Boundedness,
    Compactness,
    IdentitySuite,
    Berezin,
    Embedding,
    Schur,
    Matrix,
}

impl ReportKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReportKind::Boundedness => "boundedness",
            ReportKind::Compactness => "compactness",
            ReportKind::IdentitySuite => "identity-suite",
            ReportKind::Berezin => "berezin",
            ReportKind::Embedding => "embedding",
            ReportKind::Schur => "schur",
            ReportKind::Matrix => "matrix",
        }
    }
}

pub type Row = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub kind: ReportKind,
    pub symbol: Option<String>,
    pub parameters: Row,
    pub grid: Row,
    pub values: Vec<Row>,
    pub summary: Row,
    pub tolerances: Row,
    pub versions: Row,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format '{other}' (expected json or csv)")),
        }
    }
}

/// JSON number for a float; non-finite values become strings.
pub fn num(x: f64) -> Value {
    Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(format!("{x}")))
}

pub fn int(x: usize) -> Value {
    Value::Number(Number::from(x as u64))
}

pub fn text(s: impl Into<String>) -> Value {
    Value::String(s.into())
}

pub fn floats(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Builds a row from `(key, value)` pairs.
pub fn row<const K: usize>(pairs: [(&str, Value); K]) -> Row {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

impl DiagnosticsReport {
    pub fn new(kind: ReportKind, symbol: Option<String>) -> Self {
        let mut versions = Row::new();
        versions.insert("bergman-lab".into(), text(env!("CARGO_PKG_VERSION")));
        Self {
            kind,
            symbol,
            parameters: Row::new(),
            grid: Row::new(),
            values: Vec::new(),
            summary: Row::new(),
            tolerances: Row::new(),
            versions,
        }
    }

    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("kind".into(), text(self.kind.as_str()));
        m.insert(
            "symbol".into(),
            self.symbol.clone().map(Value::String).unwrap_or(Value::Null),
        );
        let obj = |r: &Row| Value::Object(r.clone().into_iter().collect());
        m.insert("parameters".into(), obj(&self.parameters));
        m.insert("grid".into(), obj(&self.grid));
        m.insert("values".into(), Value::Array(self.values.iter().map(obj).collect()));
        m.insert("summary".into(), obj(&self.summary));
        m.insert("tolerances".into(), obj(&self.tolerances));
        m.insert("versions".into(), obj(&self.versions));
        Value::Object(m)
    }

    pub fn emit(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Json => {
                let mut s = String::new();
                write_json(&self.to_value(), 0, &mut s);
                s.push('\n');
                s.into_bytes()
            }
            Format::Csv => self.emit_csv().into_bytes(),
        }
    }

    fn emit_csv(&self) -> String {
        let mut keys: Vec<&String> = self.values.iter().flat_map(|r| r.keys()).collect();
        keys.sort();
        keys.dedup();
        let mut out = String::new();
        out.push_str(&keys.iter().map(|k| csv_field(k)).collect::<Vec<_>>().join(","));
        out.push('\n');
        for r in &self.values {
            let cells: Vec<String> = keys
                .iter()
                .map(|k| match r.get(*k) {
                    None | Some(Value::Null) => String::new(),
                    Some(Value::String(s)) => csv_field(s),
                    Some(v) => {
                        let mut s = String::new();
                        write_json(v, usize::MAX, &mut s);
                        csv_field(&s)
                    }
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Inverse of [`DiagnosticsReport::emit`] with [`Format::Json`].
    pub fn parse(bytes: &[u8]) -> Result<Self, String> {
        let v: Value = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
        let o = v.as_object().ok_or("report must be a JSON object")?;
        let kind: ReportKind = serde_json::from_value(o.get("kind").cloned().ok_or("missing kind")?)
            .map_err(|e| e.to_string())?;
        let row_of = |key: &str| -> Result<Row, String> {
            match o.get(key) {
                Some(Value::Object(m)) => Ok(m.clone().into_iter().collect()),
                _ => Err(format!("missing object '{key}'")),
            }
        };
        let values = match o.get("values") {
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::Object(m) => Ok(m.clone().into_iter().collect()),
                    _ => Err("values[] entries must be objects".to_string()),
                })
                .collect::<Result<Vec<Row>, String>>()?,
            _ => return Err("missing array 'values'".into()),
        };
        Ok(Self {
            kind,
            symbol: o.get("symbol").and_then(|s| s.as_str()).map(str::to_string),
            parameters: row_of("parameters")?,
            grid: row_of("grid")?,
            values,
            summary: row_of("summary")?,
            tolerances: row_of("tolerances")?,
            versions: row_of("versions")?,
        })
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_float(x: f64, out: &mut String) {
    let _ = write!(out, "{x:.16e}");
}

/// Pretty-prints with two-space indentation; `indent == usize::MAX` gives one line.
fn write_json(v: &Value, indent: usize, out: &mut String) {
    let compact = indent == usize::MAX;
    let pad = |out: &mut String, n: usize| {
        if !compact {
            out.push('\n');
            out.push_str(&"  ".repeat(n));
        }
    };
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_u64() {
                let _ = write!(out, "{i}");
            } else if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else {
                write_float(n.as_f64().unwrap_or(f64::NAN), out);
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serialization")),
        Value::Array(a) => {
            if a.is_empty() {
                out.push_str("[]");
                return;
            }
            let scalar = a.iter().all(|x| !x.is_array() && !x.is_object());
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                    if scalar || compact {
                        out.push(' ');
                    }
                }
                if !scalar {
                    pad(out, indent.saturating_add(1));
                }
                write_json(x, if compact { indent } else { indent + 1 }, out);
            }
            if !scalar {
                pad(out, indent);
            }
            out.push(']');
        }
        Value::Object(m) => {
            if m.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                    if compact {
                        out.push(' ');
                    }
                }
                pad(out, indent.saturating_add(1));
                out.push_str(&serde_json::to_string(k).expect("key serialization"));
                out.push_str(": ");
                write_json(&m[k], if compact { indent } else { indent + 1 }, out);
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DiagnosticsReport {
        let mut r = DiagnosticsReport::new(ReportKind::Compactness, Some("disk(0.5)".into()));
        r.parameters.insert("N".into(), int(64));
        r.parameters.insert("r_schedule".into(), floats(&[0.9, 0.99, 0.999]));
        r.values.push(row([("r", num(0.9)), ("norm", num(0.0475)), ("note", text("a,b"))]));
        r.values.push(row([("r", num(0.99)), ("norm", num(1.0 / 3.0))]));
        r.summary.insert("verdict".into(), text("consistent with compactness"));
        r.summary.insert("ok".into(), Value::Bool(true));
        r.tolerances.insert("decay_factor".into(), num(2.0));
        r
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = sample();
        let bytes = r.emit(Format::Json);
        let back = DiagnosticsReport::parse(&bytes).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.emit(Format::Json), bytes);
        let s = String::from_utf8(bytes).unwrap();
        assert!(s.contains("3.3333333333333331e-1"));
    }

    #[test]
    fn empty_grid_report() {
        let r = DiagnosticsReport::new(ReportKind::Boundedness, None);
        let bytes = r.emit(Format::Json);
        let s = String::from_utf8(bytes.clone()).unwrap();
        assert!(s.contains("\"values\": []"));
        assert!(s.contains("\"summary\": {}"));
        assert_eq!(DiagnosticsReport::parse(&bytes).unwrap(), r);
    }

    #[test]
    fn csv_has_sorted_union_header() {
        let csv = String::from_utf8(sample().emit(Format::Csv)).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("norm,note,r"));
        assert_eq!(lines.next(), Some("4.7500000000000001e-2,\"a,b\",9.0000000000000002e-1"));
        assert_eq!(lines.next(), Some("3.3333333333333331e-1,,9.8999999999999999e-1"));
    }
}
