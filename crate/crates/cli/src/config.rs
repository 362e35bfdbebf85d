//! Run configuration: flags, an optional flat `key = value` file, and
//! defaults, merged in that order of precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bergman_lab::kernel::ExponentConvention;
use bergman_lab::report::Format;
use bergman_lab::suites::DEFAULT_SEED;
use bergman_lab::toeplitz::TailModel;
use bergman_lab::QuadratureConfig;
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

/// Radii beyond this are rejected; every kernel quantity blows up at the boundary.
pub const MAX_RADIUS: f64 = 0.995;
pub const MAX_ORDER: usize = 1024;

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("invalid value '{value}' for '{key}': {why}"))
}

#[derive(Debug, Parser)]
#[command(name = "bergman-lab", version, about = "Toeplitz operators with L^1 symbols on the Bergman space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run identity suites; exit 1 if any assertion fails.
    Verify(Flags),
    /// Berezin transform on a polar grid, by quadrature and from the matrix.
    Berezin(Flags),
    /// Toeplitz matrix of a symbol.
    Matrix(Flags),
    /// Invariant norm profile sup ‖T_f k_z‖ over a grid.
    BoundCheck(Flags),
    /// Berezin boundary profile and truncation remainder norms.
    CompactCheck(Flags),
    /// Luecking embedding criterion for a density or atomic measure.
    Luecking(Flags),
    /// Schur row/column integrals and the operator-S ratio on a grid.
    Schur(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Verify(_) => "verify",
            Command::Berezin(_) => "berezin",
            Command::Matrix(_) => "matrix",
            Command::BoundCheck(_) => "bound-check",
            Command::CompactCheck(_) => "compact-check",
            Command::Luecking(_) => "luecking",
            Command::Schur(_) => "schur",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Verify(f)
            | Command::Berezin(f)
            | Command::Matrix(f)
            | Command::BoundCheck(f)
            | Command::CompactCheck(f)
            | Command::Luecking(f)
            | Command::Schur(f) => f,
        }
    }
}

/// Every flag is kept as text so flags and file entries share one parser.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Expression such as "disk(0.5)" or "builtin:boundary-power:0.75".
    #[arg(long)]
    pub symbol: Option<String>,
    /// Truncation order.
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Comma-separated radii in [0, 0.995].
    #[arg(long)]
    pub radii: Option<String>,
    #[arg(long)]
    pub angles: Option<String>,
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long = "r-schedule")]
    pub r_schedule: Option<String>,
    #[arg(long = "quad-radial")]
    pub quad_radial: Option<String>,
    #[arg(long = "quad-angular")]
    pub quad_angular: Option<String>,
    #[arg(long = "graded-panels")]
    pub graded_panels: Option<String>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub output: Option<String>,
    /// json or csv.
    #[arg(long)]
    pub format: Option<String>,
    /// Worker cap; falls back to BERGMAN_LAB_THREADS.
    #[arg(long)]
    pub threads: Option<String>,
    /// Seed for randomized identity samples.
    #[arg(long)]
    pub seed: Option<String>,
    /// Identity suite(s) for `verify`, comma-separated; default all.
    #[arg(long)]
    pub suite: Option<String>,
    /// Atoms "re,im,mass;re,im,mass" for `luecking`.
    #[arg(long)]
    pub atoms: Option<String>,
    /// weight-squared or weight-plain, for `schur`.
    #[arg(long)]
    pub convention: Option<String>,
    /// linear-diagonal or truncated Berezin tail.
    #[arg(long)]
    pub tail: Option<String>,
}

const KEYS: [&str; 20] = [
    "symbol",
    "N",
    "radii",
    "angles",
    "epsilon",
    "p",
    "q",
    "delta",
    "r-schedule",
    "quad-radial",
    "quad-angular",
    "graded-panels",
    "output",
    "format",
    "threads",
    "seed",
    "suite",
    "atoms",
    "convention",
    "tail",
];

impl Flags {
    fn entries(&self) -> BTreeMap<&'static str, String> {
        let pairs: [(&'static str, &Option<String>); 20] = [
            ("symbol", &self.symbol),
            ("N", &self.n),
            ("radii", &self.radii),
            ("angles", &self.angles),
            ("epsilon", &self.epsilon),
            ("p", &self.p),
            ("q", &self.q),
            ("delta", &self.delta),
            ("r-schedule", &self.r_schedule),
            ("quad-radial", &self.quad_radial),
            ("quad-angular", &self.quad_angular),
            ("graded-panels", &self.graded_panels),
            ("output", &self.output),
            ("format", &self.format),
            ("threads", &self.threads),
            ("seed", &self.seed),
            ("suite", &self.suite),
            ("atoms", &self.atoms),
            ("convention", &self.convention),
            ("tail", &self.tail),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect()
    }
}

/// Parses the flat config format: `key = value` per line, `#` comments,
/// blank lines ignored. Keys are the long flag names.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<&'static str, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("config line {}: expected 'key = value'", lineno + 1)))?;
        let k = k.trim();
        let key = KEYS
            .iter()
            .find(|known| **known == k)
            .ok_or_else(|| ConfigError(format!("config line {}: unknown key '{k}'", lineno + 1)))?;
        let v = v.trim().trim_matches('"').to_string();
        out.insert(*key, v);
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<&'static str, String>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub symbol: Option<String>,
    /// `None` when unset; commands pick their own default.
    pub n: Option<usize>,
    pub radii: Option<Vec<f64>>,
    pub angles: Option<usize>,
    pub epsilon: f64,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub delta: f64,
    pub r_schedule: Vec<f64>,
    pub quadrature: QuadratureConfig,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
    pub seed: u64,
    pub suites: Vec<String>,
    pub atoms: Option<Vec<(Complex64, f64)>>,
    pub convention: ExponentConvention,
    pub tail: TailModel,
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.trim().parse::<T>().map_err(|e| bad(key, v, e))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_num::<f64>(key, s))
        .collect()
}

fn parse_atoms(v: &str) -> Result<Vec<(Complex64, f64)>, ConfigError> {
    v.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|triple| {
            let xs = parse_list("atoms", triple)?;
            match xs.as_slice() {
                [re, im, mass] => Ok((Complex64::new(*re, *im), *mass)),
                _ => Err(bad("atoms", triple, "expected re,im,mass")),
            }
        })
        .collect()
}

fn require(ok: bool, key: &str, v: &str, why: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(bad(key, v, why))
    }
}

impl RunConfig {
    /// Merges `flags > file > defaults` and validates ranges.
    pub fn resolve(command: &str, flags: &Flags, env_threads: Option<String>) -> Result<Self, ConfigError> {
        let mut merged = match &flags.config {
            Some(path) => read_config_file(path)?,
            None => BTreeMap::new(),
        };
        merged.extend(flags.entries());
        if !merged.contains_key("threads") {
            if let Some(t) = env_threads.filter(|t| !t.trim().is_empty()) {
                merged.insert("threads", t);
            }
        }
        Self::from_entries(command, &merged)
    }

    pub fn from_entries(command: &str, m: &BTreeMap<&'static str, String>) -> Result<Self, ConfigError> {
        let get = |k: &str| m.get(k).map(String::as_str);
        let mut quadrature = QuadratureConfig::default();
        let mut cfg = RunConfig {
            command: command.to_string(),
            symbol: get("symbol").map(str::to_string),
            n: None,
            radii: None,
            angles: None,
            epsilon: 0.125,
            p: None,
            q: None,
            delta: 0.25,
            r_schedule: vec![0.9, 0.99, 0.999],
            quadrature,
            output: get("output").map(PathBuf::from),
            format: Format::Json,
            threads: None,
            seed: DEFAULT_SEED,
            suites: vec!["all".to_string()],
            atoms: None,
            convention: ExponentConvention::WeightSquared,
            tail: TailModel::LinearDiagonal,
        };
        if let Some(v) = get("N") {
            let n: usize = parse_num("N", v)?;
            require((1..=MAX_ORDER).contains(&n), "N", v, "must lie in 1..=1024")?;
            cfg.n = Some(n);
        }
        if let Some(v) = get("radii") {
            let r = parse_list("radii", v)?;
            require(!r.is_empty(), "radii", v, "needs at least one radius")?;
            require(
                r.iter().all(|x| (0.0..=MAX_RADIUS).contains(x)),
                "radii",
                v,
                "radii must lie in [0, 0.995]",
            )?;
            cfg.radii = Some(r);
        }
        if let Some(v) = get("angles") {
            let a: usize = parse_num("angles", v)?;
            require(a >= 1, "angles", v, "must be at least 1")?;
            cfg.angles = Some(a);
        }
        if let Some(v) = get("epsilon") {
            let e: f64 = parse_num("epsilon", v)?;
            require(e > 0.0 && e < 0.5, "epsilon", v, "must lie in (0, 1/2)")?;
            cfg.epsilon = e;
        }
        if let Some(v) = get("p") {
            let p: f64 = parse_num("p", v)?;
            require(p > 0.0 && p.is_finite(), "p", v, "must be positive")?;
            cfg.p = Some(p);
        }
        if let Some(v) = get("q") {
            let q: f64 = parse_num("q", v)?;
            require(q > 0.0 && q.is_finite(), "q", v, "must be positive")?;
            cfg.q = Some(q);
        }
        if let Some(v) = get("delta") {
            let d: f64 = parse_num("delta", v)?;
            require(d > 0.0 && d < 0.5, "delta", v, "must lie in (0, 1/2)")?;
            cfg.delta = d;
        }
        if let Some(v) = get("r-schedule") {
            let r = parse_list("r-schedule", v)?;
            require(
                !r.is_empty() && r.iter().all(|x| *x > 0.0 && *x < 1.0),
                "r-schedule",
                v,
                "entries must lie in (0, 1)",
            )?;
            cfg.r_schedule = r;
        }
        if let Some(v) = get("quad-radial") {
            quadrature.n_radial = parse_num("quad-radial", v)?;
            require(quadrature.n_radial >= 1, "quad-radial", v, "must be at least 1")?;
        }
        if let Some(v) = get("quad-angular") {
            quadrature.n_angular = parse_num("quad-angular", v)?;
            require(quadrature.n_angular >= 1, "quad-angular", v, "must be at least 1")?;
        }
        if let Some(v) = get("graded-panels") {
            quadrature.graded_panels = parse_num("graded-panels", v)?;
        }
        cfg.quadrature = quadrature;
        if let Some(v) = get("format") {
            cfg.format = v.parse().map_err(|e: String| bad("format", v, e))?;
        }
        if let Some(v) = get("threads") {
            let t: usize = parse_num("threads", v)?;
            require(t >= 1, "threads", v, "must be at least 1")?;
            cfg.threads = Some(t);
        }
        if let Some(v) = get("seed") {
            cfg.seed = parse_num("seed", v)?;
        }
        if let Some(v) = get("suite") {
            cfg.suites = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        }
        if let Some(v) = get("atoms") {
            cfg.atoms = Some(parse_atoms(v)?);
        }
        if let Some(v) = get("convention") {
            cfg.convention = match v {
                "weight-squared" => ExponentConvention::WeightSquared,
                "weight-plain" => ExponentConvention::WeightPlain,
                _ => return Err(bad("convention", v, "expected weight-squared or weight-plain")),
            };
        }
        if let Some(v) = get("tail") {
            cfg.tail = match v {
                "linear-diagonal" => TailModel::LinearDiagonal,
                "truncated" => TailModel::Truncated,
                _ => return Err(bad("tail", v, "expected linear-diagonal or truncated")),
            };
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_over_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# sample\nN = 32\nangles=4\nformat = csv\n").unwrap();
        let flags = Flags {
            config: Some(path),
            n: Some("48".into()),
            ..Flags::default()
        };
        let cfg = RunConfig::resolve("matrix", &flags, None).unwrap();
        assert_eq!(cfg.n, Some(48));
        assert_eq!(cfg.angles, Some(4));
        assert_eq!(cfg.format, Format::Csv);
        assert_eq!(cfg.epsilon, 0.125);
    }

    #[test]
    fn env_threads_is_a_fallback() {
        let cfg = RunConfig::resolve("verify", &Flags::default(), Some("3".into())).unwrap();
        assert_eq!(cfg.threads, Some(3));
        let flags = Flags {
            threads: Some("1".into()),
            ..Flags::default()
        };
        assert_eq!(RunConfig::resolve("verify", &flags, Some("3".into())).unwrap().threads, Some(1));
    }

    #[test]
    fn rejects_out_of_range_values() {
        for (k, v) in [
            ("radii", "0.5,0.999"),
            ("epsilon", "0.5"),
            ("delta", "0"),
            ("N", "0"),
            ("format", "xml"),
            ("atoms", "0.1,0.2"),
        ] {
            let mut m = BTreeMap::new();
            m.insert(*KEYS.iter().find(|x| **x == k).unwrap(), v.to_string());
            assert!(RunConfig::from_entries("verify", &m).is_err(), "{k}={v}");
        }
        assert!(parse_config_text("bogus = 1").is_err());
        assert!(parse_config_text("N 32").is_err());
    }
}
