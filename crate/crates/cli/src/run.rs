//! Command execution. Diagnostic verdicts are data; only failed identity
//! assertions, bad configuration and numerical breakdowns change the exit
//! status.

use std::f64::consts::PI;
use std::io::Write;

use bergman_lab::carleson::{embedding_check, EmbeddingGrid, EmbeddingQuery, MeasureSpec};
use bergman_lab::kernel::{berezin_direct, lemma3_ratio, schur_col_integral, schur_row_integral, SchurWeightSpec};
use bergman_lab::report::{self, floats, num, text, DiagnosticsReport, Format, ReportKind};
use bergman_lab::suites::{run_suites, suite_passed, SuiteConfig};
use bergman_lab::toeplitz::{
    assemble, berezin_from_matrix, berezin_reliable, compactness_diagnostic, invariant_norm_profile, truncation_deficit,
    CompactnessSettings, ProfileSettings, DEFAULT_RADII,
};
use bergman_lab::{Error, Point, Symbol, UnitDiskPoint};

use crate::config::{ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{operation}: {source}")]
    Library {
        operation: &'static str,
        #[source]
        source: Error,
    },
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Library { source, .. } if source.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_CONFIG,
        }
    }
}

fn lib<T>(operation: &'static str, r: bergman_lab::Result<T>) -> Result<T, RunError> {
    r.map_err(|source| RunError::Library { operation, source })
}

/// Output of one command: the serialized bytes and the exit status.
#[derive(Debug)]
pub struct Outcome {
    pub bytes: Vec<u8>,
    pub status: i32,
}

fn symbol(cfg: &RunConfig) -> Result<Symbol, RunError> {
    let text = cfg
        .symbol
        .as_deref()
        .ok_or_else(|| RunError::Config(format!("'{}' needs --symbol", cfg.command)))?;
    lib("parse symbol", Symbol::from_spec(text))
}

fn radii(cfg: &RunConfig, default: &[f64]) -> Vec<f64> {
    cfg.radii.clone().unwrap_or_else(|| default.to_vec())
}

/// 64 by default, 256 when the grid reaches radius 0.99.
fn order(cfg: &RunConfig, radii: &[f64]) -> usize {
    cfg.n.unwrap_or_else(|| {
        if radii.iter().any(|r| *r >= 0.99) {
            256
        } else {
            64
        }
    })
}

fn grid_points(radii: &[f64], angles: usize) -> Result<Vec<(f64, f64, UnitDiskPoint)>, RunError> {
    let mut out = Vec::with_capacity(radii.len() * angles);
    for &r in radii {
        for k in 0..angles {
            let theta = 2.0 * PI * k as f64 / angles as f64;
            out.push((r, theta, lib("grid point", UnitDiskPoint::from_polar(r, theta))?));
        }
    }
    Ok(out)
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let (report, status) = match cfg.command.as_str() {
        "verify" => {
            let suites = SuiteConfig {
                seed: cfg.seed,
                quadrature: cfg.quadrature,
            };
            let rep = lib("verify", run_suites(&cfg.suites, &suites))?;
            let status = if suite_passed(&rep) { EXIT_OK } else { EXIT_ASSERTION };
            (rep, status)
        }
        "berezin" => (berezin(cfg)?, EXIT_OK),
        "matrix" => {
            let f = symbol(cfg)?;
            let n = cfg.n.unwrap_or(64);
            let rule = lib("matrix rule", cfg.quadrature.matrix_rule(&f, n))?;
            let a = lib("assemble", assemble(&f, n, &rule))?;
            if cfg.format == Format::Csv {
                return Ok(Outcome {
                    bytes: a.to_csv().into_bytes(),
                    status: EXIT_OK,
                });
            }
            (a.to_report(), EXIT_OK)
        }
        "bound-check" => {
            let f = symbol(cfg)?;
            let radii = radii(cfg, &DEFAULT_RADII);
            let n = order(cfg, &radii);
            let q = cfg.q.unwrap_or(2.0);
            if !(1.0..=2.0).contains(&q) {
                return Err(RunError::Config(format!("bound-check needs q in [1, 2], got {q}")));
            }
            let rule = lib("matrix rule", cfg.quadrature.matrix_rule(&f, n))?;
            let a = lib("assemble", assemble(&f, n, &rule))?;
            let settings = ProfileSettings {
                radii,
                angles: cfg.angles.unwrap_or(16),
                q,
                quadrature: cfg.quadrature,
            };
            (lib("invariant norm profile", invariant_norm_profile(&a, &settings))?, EXIT_OK)
        }
        "compact-check" => {
            let f = symbol(cfg)?;
            let radii = radii(cfg, &DEFAULT_RADII);
            let n = order(cfg, &radii);
            let settings = CompactnessSettings {
                radii,
                angles: cfg.angles.unwrap_or(16),
                r_schedule: cfg.r_schedule.clone(),
                tail: cfg.tail,
                quadrature: cfg.quadrature,
            };
            (lib("compactness diagnostic", compactness_diagnostic(&f, n, &settings))?, EXIT_OK)
        }
        "luecking" => {
            let mu = match (&cfg.atoms, &cfg.symbol) {
                (Some(atoms), _) => lib("atoms", MeasureSpec::atoms(atoms.clone()))?,
                (None, Some(_)) => MeasureSpec::density(symbol(cfg)?),
                (None, None) => return Err(RunError::Config("'luecking' needs --symbol or --atoms".into())),
            };
            let query = lib(
                "embedding query",
                EmbeddingQuery::new(cfg.p.unwrap_or(2.0), cfg.q.unwrap_or(1.0), cfg.delta),
            )?;
            (lib("embedding check", embedding_check(&mu, &query, &EmbeddingGrid::default()))?, EXIT_OK)
        }
        "schur" => (schur(cfg)?, EXIT_OK),
        other => return Err(RunError::Config(format!("unknown command '{other}'"))),
    };
    Ok(Outcome {
        bytes: report.emit(cfg.format),
        status,
    })
}

fn berezin(cfg: &RunConfig) -> Result<DiagnosticsReport, RunError> {
    let f = symbol(cfg)?;
    let radii = radii(cfg, &DEFAULT_RADII);
    let n = order(cfg, &radii);
    let angles = cfg.angles.unwrap_or(16);
    let q = &cfg.quadrature;
    let a = lib("assemble", assemble(&f, n, &lib("matrix rule", q.matrix_rule(&f, n))?))?;
    let mut rep = DiagnosticsReport::new(ReportKind::Berezin, Some(f.id()));
    rep.parameters.insert("N".into(), report::int(n));
    rep.grid.insert("radii".into(), floats(&radii));
    rep.grid.insert("angles".into(), report::int(angles));
    let mut max_diff: f64 = 0.0;
    let mut per_radius = Vec::with_capacity(radii.len());
    for &radius in &radii {
        if !berezin_reliable(n, radius) {
            log::warn!("berezin: radius {radius} is beyond the reliable range of an order-{n} section");
        }
        let na = q.angular_for_radius(radius);
        let rule = if radius > 0.95 {
            lib("rule", q.graded_rule(f.breakpoints(), na))?
        } else {
            lib("rule", q.rule_with(&f, na))?
        };
        let mut best: f64 = 0.0;
        for (_, theta, z) in grid_points(&[radius], angles)? {
            let direct = lib("berezin transform", berezin_direct(&rule, &f, z))?;
            let from_matrix = berezin_from_matrix(&a, z, cfg.tail);
            let diff = (direct - from_matrix).norm();
            max_diff = max_diff.max(diff);
            best = best.max(direct.norm());
            rep.values.push(report::row([
                ("radius", num(radius)),
                ("theta", num(theta)),
                ("direct_re", num(direct.re)),
                ("direct_im", num(direct.im)),
                ("matrix_re", num(from_matrix.re)),
                ("matrix_im", num(from_matrix.im)),
                ("difference", num(diff)),
                ("kernel_deficit", num(truncation_deficit(z, n))),
            ]));
        }
        per_radius.push(best);
    }
    rep.summary.insert("max_difference".into(), num(max_diff));
    rep.summary.insert("per_radius_max".into(), floats(&per_radius));
    rep.summary.insert("sup".into(), num(per_radius.iter().copied().fold(0.0, f64::max)));
    Ok(rep)
}

const SCHUR_RADII: [f64; 5] = [0.0, 0.3, 0.6, 0.8, 0.9];

fn schur(cfg: &RunConfig) -> Result<DiagnosticsReport, RunError> {
    let f = symbol(cfg)?;
    let radii = radii(cfg, &SCHUR_RADII);
    let n = cfg.n.unwrap_or(128);
    let angles = cfg.angles.unwrap_or(8);
    let p = cfg.p.unwrap_or(2.0);
    let q = &cfg.quadrature;
    let weight = lib("schur weight", SchurWeightSpec::new(cfg.epsilon, cfg.convention))?;
    let a = lib("assemble", assemble(&f, n, &lib("matrix rule", q.matrix_rule(&f, n))?))?;
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    let series_rule = lib(
        "rule",
        q.graded_rule(Vec::new(), q.angular_for_radius(rmax).max(n.next_power_of_two())),
    )?;
    let symbol_rule = lib("rule", q.graded_rule(f.breakpoints(), q.angular_for_radius(rmax)))?;

    let mut rep = DiagnosticsReport::new(ReportKind::Schur, Some(f.id()));
    rep.parameters.insert("N".into(), report::int(n));
    rep.parameters.insert("epsilon".into(), num(cfg.epsilon));
    rep.parameters.insert("p".into(), num(p));
    rep.parameters.insert(
        "convention".into(),
        text(match cfg.convention {
            bergman_lab::kernel::ExponentConvention::WeightSquared => "weight-squared",
            bergman_lab::kernel::ExponentConvention::WeightPlain => "weight-plain",
        }),
    );
    rep.grid.insert("radii".into(), floats(&radii));
    rep.grid.insert("angles".into(), report::int(angles));
    rep.grid.insert("rule".into(), text(series_rule.fingerprint()));
    let (mut c1, mut c2, mut l3, mut l3b): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for (radius, theta, z) in grid_points(&radii, angles)? {
        let row = lib("schur row integral", schur_row_integral(&a, z, &weight, &series_rule))?;
        let col = lib("schur column integral", schur_col_integral(&a, z, &weight, &series_rule))?;
        let ratio = lib(
            "weighted ratio",
            lemma3_ratio(&symbol_rule, |pt: &Point| Ok(f.eval(pt)?), z, cfg.epsilon, p),
        )?;
        c1 = c1.max(row.constant);
        c2 = c2.max(col.constant);
        l3 = l3.max(ratio.ratio);
        l3b = l3b.max(ratio.ratio_k2eps);
        rep.values.push(report::row([
            ("radius", num(radius)),
            ("theta", num(theta)),
            ("row_integral", num(row.value)),
            ("row_constant", num(row.constant)),
            ("col_integral", num(col.value)),
            ("col_constant", num(col.constant)),
            ("s", num(ratio.s)),
            ("norm_p", num(ratio.norm_p)),
            ("ratio", num(ratio.ratio)),
            ("ratio_k2eps", num(ratio.ratio_k2eps)),
        ]));
    }
    rep.summary.insert("schur_c1".into(), num(c1));
    rep.summary.insert("schur_c2".into(), num(c2));
    rep.summary.insert("ratio_sup".into(), num(l3));
    rep.summary.insert("ratio_sup_k2eps".into(), num(l3b));
    rep.tolerances.insert("kernel_truncation".into(), num(0.01));
    Ok(rep)
}

/// Writes to `--output` or stdout.
pub fn write_output(cfg: &RunConfig, bytes: &[u8]) -> Result<(), RunError> {
    match &cfg.output {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}
