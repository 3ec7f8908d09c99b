//! ε-sweeps of the averages, residual-order fits and bound audits.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    cor52_bound, cor52_schedule, lemma51_bound, otto_bound, thm1_bound, thm2_bound, thm2_limit, truncation_bound,
    BoundInputs,
};
use crate::corelap::{
    average_mixed_parts, ball_mean_local, eps_parts, lap_frac, lap_inf_local, laplacian_local, line_average,
    midpoint_local, EvalOpts, OperatorValue,
};
use crate::error::{domain, Error, Result};
use crate::fracmeasure::{check_order, small_constant, QuadSpec};
use crate::prism::{average_prism_o, prism_average_detail, PrismQuad, PrismSpec};
use crate::sphereopt::sphere_points;
use crate::testfuncs::{catalog, parse_entry, TestFunction};

/// Slack on fitted orders.
pub const ORDER_TOL: f64 = 0.15;
/// Slack on the prism order, whose aperture term converges more slowly.
pub const PRISM_ORDER_TOL: f64 = 0.2;
/// Multiple of the quadrature error estimate added to every bound.
/// Relative size below which a residual is indistinguishable from zero.
pub const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

pub const QUAD_ALLOWANCE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AverageKind {
    Mvp1,
    Mvp2,
    Mvp3,
    Midpoint,
    BallMean,
}

impl AverageKind {
    pub const ALL: [AverageKind; 5] = [Self::Mvp1, Self::Mvp2, Self::Mvp3, Self::Midpoint, Self::BallMean];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Mvp1 => "mvp1",
            Self::Mvp2 => "mvp2",
            Self::Mvp3 => "mvp3",
            Self::Midpoint => "midpoint",
            Self::BallMean => "ball-mean",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Parse(format!("unknown average '{name}' (expected mvp1, mvp2, mvp3, midpoint or ball-mean)")))
    }

    /// Order the residual should reach at least, before the slack.
    pub fn expected_order(&self, s: f64) -> f64 {
        match self {
            Self::Mvp1 | Self::Mvp3 => (4.0 * s - 1.0).min(2.0),
            Self::Mvp2 => (4.0 * s - 1.0).min(3.0),
            Self::Midpoint => 3.0,
            Self::BallMean => 3.0,
        }
    }

    pub fn order_tol(&self) -> f64 {
        if *self == Self::Mvp3 {
            PRISM_ORDER_TOL
        } else {
            ORDER_TOL
        }
    }
}

/// Prism parameters for MVP3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Schedule {
    /// `R = ε^{1/(2s)−1}`, `α = ε^{4s−1/(2s)}`.
    Cor52,
    Fixed { r: f64, alpha: f64 },
}

/// One sweep: an entry, a point, orders and radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub entry: String,
    /// Defaults to the entry's designated point.
    pub point: Option<Vec<f64>>,
    pub s_values: Vec<f64>,
    /// Explicit radii; otherwise `n_eps` points from `η_x/4` down by `√2`.
    pub eps: Option<Vec<f64>>,
    pub n_eps: usize,
    pub average: AverageKind,
    pub schedule: Schedule,
    pub fit_window: usize,
    pub opts: EvalOpts,
    pub prism_quad: PrismQuad,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            entry: "cosine:xi=1,0".into(),
            point: None,
            s_values: vec![0.75],
            eps: None,
            n_eps: 12,
            average: AverageKind::Mvp1,
            schedule: Schedule::Cor52,
            fit_window: 6,
            opts: EvalOpts::default(),
            prism_quad: PrismQuad::default(),
        }
    }
}

/// `η/4 · 2^{-k/2}`, `k = 0..n`.
pub fn default_eps_grid(eta: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| 0.25 * eta * 2f64.powf(-(k as f64) / 2.0)).collect()
}

impl SweepConfig {
    fn resolve(&self) -> Result<(TestFunction, Vec<f64>, Vec<f64>)> {
        let phi = parse_entry(&self.entry)?;
        let x = match &self.point {
            Some(p) => p.clone(),
            None => phi.point.clone(),
        };
        phi.check_point(&x)?;
        let eta = phi.eta(&x);
        let grid = match &self.eps {
            Some(e) => e.clone(),
            None => default_eps_grid(eta, self.n_eps),
        };
        if grid.is_empty() {
            return domain("empty eps grid");
        }
        if grid.windows(2).any(|w| !(w[1] < w[0])) {
            return domain("eps grid must be strictly decreasing");
        }
        if grid.iter().any(|&e| !(e > 0.0 && e < eta)) {
            return domain(format!("every eps must lie in (0, eta = {eta})"));
        }
        for &s in &self.s_values {
            check_order(s)?;
        }
        Ok((phi, x, grid))
    }
}

/// Least-squares slope of `log|residual|` against `log ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    /// `+∞` when some residual is exactly zero.
    pub order: f64,
    pub r_squared: f64,
    pub points: usize,
    pub exact_zero: bool,
}

pub fn fit_order(eps: &[f64], residuals: &[f64]) -> Result<OrderFit> {
    if eps.len() != residuals.len() {
        return domain("fit_order needs as many residuals as radii");
    }
    if eps.len() < 3 {
        return domain("fit_order needs at least 3 points");
    }
    if eps.iter().any(|&e| !(e > 0.0)) {
        return domain("fit_order needs positive radii");
    }
    if residuals.contains(&0.0) {
        return Ok(OrderFit { order: f64::INFINITY, r_squared: 1.0, points: eps.len(), exact_zero: true });
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::Domain("fit_order got a non-finite residual".into()));
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| r.abs().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    Ok(OrderFit { order: slope, r_squared, points: xs.len(), exact_zero: false })
}

/// One `(entry, s, ε)` row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub entry: String,
    pub average: String,
    pub s: f64,
    pub eps: f64,
    pub value: Option<f64>,
    pub phi_x: Option<f64>,
    pub deviation: Option<f64>,
    pub predicted: Option<f64>,
    pub residual: Option<f64>,
    pub bound_name: Option<String>,
    pub bound: Option<f64>,
    pub allowance: Option<f64>,
    /// `bound − |residual|`.
    pub margin: Option<f64>,
    pub pass: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub entry: String,
    pub point: Vec<f64>,
    pub average: AverageKind,
    pub s: f64,
    /// `ℒ_s[φ](x)` at tight tolerance, shared by all rows.
    pub reference: Option<f64>,
    pub rows: Vec<SweepRow>,
    pub fit: Option<OrderFit>,
    pub expected_order: f64,
    pub order_ok: Option<bool>,
    pub bounds_ok: bool,
}

impl ExpansionReport {
    /// Every pass/fail flag of the report passes.
    pub fn passed(&self) -> bool {
        self.bounds_ok && self.order_ok != Some(false) && self.rows.iter().all(|r| r.error.is_none())
    }
}

struct Measured {
    value: f64,
    predicted: f64,
    bound: Option<(String, f64)>,
    allowance: f64,
}

fn reference_opts(opts: &EvalOpts) -> EvalOpts {
    EvalOpts { quad: QuadSpec { rel_tol: opts.quad.rel_tol.min(1e-9), ..opts.quad }, ..*opts }
}

fn bound_or_none(r: Result<f64>, name: &str) -> Option<(String, f64)> {
    r.ok().map(|v| (name.to_string(), v))
}

#[allow(clippy::too_many_arguments)]
fn measure(
    cfg: &SweepConfig,
    phi: &TestFunction,
    x: &[f64],
    s: f64,
    eps: f64,
    lap: Option<&OperatorValue>,
) -> Result<Measured> {
    let opts = &cfg.opts;
    let dim = x.len();
    let lap_value = || lap.map(|l| l.value).ok_or_else(|| Error::Precondition("reference operator value missing".into()));
    let lap_err = lap.map_or(0.0, |l| l.diagnostics.quad_error);
    let binputs = BoundInputs::from_entry(phi, x, s, eps);
    match cfg.average {
        AverageKind::Mvp1 => {
            let parts = eps_parts(phi, x, s, eps, opts)?;
            let k = eps.powf(2.0 * s) / (small_constant(s)? * (1.0 - s));
            Ok(Measured {
                value: parts.average(),
                predicted: k * lap_value()?,
                bound: binputs.ok().and_then(|b| bound_or_none(thm1_bound(&b), "thm1")),
                allowance: QUAD_ALLOWANCE * (parts.quad_error / parts.mass + k * lap_err),
            })
        }
        AverageKind::Mvp2 => {
            let parts = average_mixed_parts(phi, x, s, eps, opts)?;
            let k = eps.powf(2.0 * s) / small_constant(s)?;
            Ok(Measured {
                value: parts.value,
                predicted: k * lap_value()?,
                bound: binputs.ok().and_then(|b| bound_or_none(thm2_bound(&b), "thm2")),
                allowance: QUAD_ALLOWANCE * ((1.0 - s) * parts.nonlocal.quad_error / parts.nonlocal.mass + k * lap_err),
            })
        }
        AverageKind::Mvp3 => {
            let (r, alpha) = match cfg.schedule {
                Schedule::Cor52 => cor52_schedule(eps, s)?,
                Schedule::Fixed { r, alpha } => (r, alpha),
            };
            let p = average_prism_o(phi, x, eps, r, alpha, s, &cfg.prism_quad, &opts.sphere)?;
            let k = eps.powf(2.0 * s) / (small_constant(s)? * (1.0 - s));
            let bound = match cfg.schedule {
                Schedule::Cor52 => binputs.ok().and_then(|b| bound_or_none(cor52_bound(&b), "cor52")),
                Schedule::Fixed { .. } => None,
            };
            Ok(Measured {
                value: p.value,
                predicted: k * lap_value()?,
                bound,
                allowance: QUAD_ALLOWANCE * (p.quad_error + k * lap_err),
            })
        }
        AverageKind::Midpoint => {
            let m = midpoint_local(phi, x, eps, opts)?;
            Ok(Measured {
                value: m,
                predicted: 0.5 * eps * eps * lap_inf_local(phi, x)?,
                bound: binputs.ok().and_then(|b| otto_bound(&b).ok()).map(|v| ("otto/2".to_string(), 0.5 * v)),
                allowance: 0.0,
            })
        }
        AverageKind::BallMean => Ok(Measured {
            value: ball_mean_local(phi, x, eps)?,
            predicted: eps * eps * laplacian_local(phi, x)? / (2.0 * (dim as f64 + 2.0)),
            bound: None,
            allowance: 0.0,
        }),
    }
}

fn needs_reference(kind: AverageKind) -> bool {
    matches!(kind, AverageKind::Mvp1 | AverageKind::Mvp2 | AverageKind::Mvp3)
}

fn empty_row(cfg: &SweepConfig, s: f64, eps: f64) -> SweepRow {
    SweepRow {
        entry: cfg.entry.clone(),
        average: cfg.average.name().into(),
        s,
        eps,
        value: None,
        phi_x: None,
        deviation: None,
        predicted: None,
        residual: None,
        bound_name: None,
        bound: None,
        allowance: None,
        margin: None,
        pass: None,
        error: None,
    }
}

/// Runs the sweep: one report per order `s`. Failures of single radii are
/// recorded in their rows.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<ExpansionReport>> {
    let (phi, x, grid) = cfg.resolve()?;
    let fx = phi.eval(&x);
    let mut out = Vec::new();
    for &s in &cfg.s_values {
        let lap = if needs_reference(cfg.average) {
            Some(lap_frac(&phi, &x, s, &reference_opts(&cfg.opts))?)
        } else {
            None
        };
        let rows: Vec<SweepRow> = grid
            .par_iter()
            .map(|&eps| {
                let mut row = empty_row(cfg, s, eps);
                match measure(cfg, &phi, &x, s, eps, lap.as_ref()) {
                    Ok(m) => {
                        let deviation = m.value - fx;
                        let residual = deviation - m.predicted;
                        row.value = Some(m.value);
                        row.phi_x = Some(fx);
                        row.deviation = Some(deviation);
                        row.predicted = Some(m.predicted);
                        row.residual = Some(residual);
                        row.allowance = Some(m.allowance);
                        if let Some((name, b)) = m.bound {
                            row.bound_name = Some(name);
                            row.bound = Some(b);
                            row.margin = Some(b - residual.abs());
                            row.pass = Some(residual.abs() <= b + m.allowance);
                        }
                    }
                    Err(e) => row.error = Some(e.to_string()),
                }
                row
            })
            .collect();
        let window: Vec<&SweepRow> = rows.iter().rev().filter(|r| r.residual.is_some()).take(cfg.fit_window).collect();
        let fit = if window.len() >= 3 {
            let e: Vec<f64> = window.iter().map(|r| r.eps).collect();
            // Residuals at the rounding level of φ(x) count as exact zeros.
            let res: Vec<f64> = window
                .iter()
                .map(|r| {
                    let v = r.residual.unwrap_or(0.0);
                    let floor = ROUNDING_FLOOR * r.phi_x.unwrap_or(0.0).abs().max(r.value.unwrap_or(0.0).abs());
                    if v.abs() <= floor { 0.0 } else { v }
                })
                .collect();
            fit_order(&e, &res).ok()
        } else {
            None
        };
        let expected = cfg.average.expected_order(s);
        let order_ok = fit.map(|f| f.order >= expected - cfg.average.order_tol());
        let bounds_ok = rows.iter().all(|r| r.pass != Some(false));
        out.push(ExpansionReport {
            entry: cfg.entry.clone(),
            point: x.clone(),
            average: cfg.average,
            s,
            reference: lap.map(|l| l.value),
            rows,
            fit,
            expected_order: expected,
            order_ok,
            bounds_ok,
        });
    }
    Ok(out)
}

/// Which bound families an audit checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditSuite {
    Theorems,
    Prism,
    All,
}

impl AuditSuite {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "theorems" => Ok(Self::Theorems),
            "prism" => Ok(Self::Prism),
            "all" => Ok(Self::All),
            _ => Err(Error::Parse(format!("unknown audit suite '{name}' (expected theorems, prism or all)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditConfig {
    /// Catalog entries; empty means the whole catalog.
    pub entries: Vec<String>,
    pub s_values: Vec<f64>,
    pub n_eps: usize,
    pub suite: AuditSuite,
    pub opts: EvalOpts,
    pub prism_quad: PrismQuad,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            entries: Vec::new(),
            s_values: vec![0.55, 0.6, 0.75, 0.9, 0.99],
            n_eps: 12,
            suite: AuditSuite::Theorems,
            opts: EvalOpts::default(),
            prism_quad: PrismQuad::default(),
        }
    }
}

/// One inequality checked by the audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub entry: String,
    pub s: f64,
    pub eps: f64,
    pub check: String,
    pub lhs: Option<f64>,
    pub bound: Option<f64>,
    pub allowance: Option<f64>,
    pub pass: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditTable {
    pub rows: Vec<AuditRow>,
    pub violations: usize,
}

fn audit_point(entry: &str, phi: &TestFunction, x: &[f64], s: f64, eps: f64, cfg: &AuditConfig, lap: &OperatorValue) -> Vec<AuditRow> {
    let mut rows = Vec::new();
    let mut push = |check: &str, lhs: f64, bound: Result<f64>, allowance: f64| {
        let row = match bound {
            Ok(b) => AuditRow {
                entry: entry.into(),
                s,
                eps,
                check: check.into(),
                lhs: Some(lhs),
                bound: Some(b),
                allowance: Some(allowance),
                pass: lhs <= b + allowance,
                note: None,
            },
            Err(Error::OutOfRegime(m)) | Err(Error::Precondition(m)) => AuditRow {
                entry: entry.into(),
                s,
                eps,
                check: check.into(),
                lhs: Some(lhs),
                bound: None,
                allowance: None,
                pass: true,
                note: Some(format!("not applicable: {m}")),
            },
            Err(e) => AuditRow {
                entry: entry.into(),
                s,
                eps,
                check: check.into(),
                lhs: Some(lhs),
                bound: None,
                allowance: None,
                pass: false,
                note: Some(e.to_string()),
            },
        };
        rows.push(row);
    };
    let fail = |check: &str, e: Error| AuditRow {
        entry: entry.into(),
        s,
        eps,
        check: check.into(),
        lhs: None,
        bound: None,
        allowance: None,
        pass: false,
        note: Some(e.to_string()),
    };
    let b = match BoundInputs::from_entry(phi, x, s, eps) {
        Ok(b) => b,
        Err(e) => return vec![fail("inputs", e)],
    };
    let cs = match small_constant(s) {
        Ok(c) => c,
        Err(e) => return vec![fail("inputs", e)],
    };
    let theorems = matches!(cfg.suite, AuditSuite::Theorems | AuditSuite::All);
    let prism = matches!(cfg.suite, AuditSuite::Prism | AuditSuite::All);
    let mut extra = Vec::new();
    if theorems {
        match average_mixed_parts(phi, x, s, eps, &cfg.opts) {
            Ok(m) => {
                let p = &m.nonlocal;
                let k1 = eps.powf(2.0 * s) / (cs * (1.0 - s));
                let lhs1 = (p.average() - p.phi_x - k1 * lap.value).abs();
                let al1 = QUAD_ALLOWANCE * (p.quad_error / p.mass + k1 * lap.diagnostics.quad_error);
                push("thm1", lhs1, thm1_bound(&b), al1);
                let lhs_t = (p.lap() - lap.value).abs();
                push("truncation", lhs_t, truncation_bound(&b), QUAD_ALLOWANCE * (p.quad_error + lap.diagnostics.quad_error));
                let k2 = eps.powf(2.0 * s) / cs;
                let lhs2 = (m.value - p.phi_x - k2 * lap.value).abs();
                let al2 = QUAD_ALLOWANCE * ((1.0 - s) * p.quad_error / p.mass + k2 * lap.diagnostics.quad_error);
                push("thm2", lhs2, thm2_bound(&b), al2);
            }
            Err(e) => extra.push(fail("theorems", e)),
        }
    }
    if prism {
        if let Ok((r, alpha)) = cor52_schedule(eps, s) {
            match average_prism_o(phi, x, eps, r, alpha, s, &cfg.prism_quad, &cfg.opts.sphere) {
                Ok(p) => {
                    let k = eps.powf(2.0 * s) / (cs * (1.0 - s));
                    let lhs = (p.value - phi.eval(x) - k * lap.value).abs();
                    push("cor52", lhs, cor52_bound(&b), QUAD_ALLOWANCE * (p.quad_error + k * lap.diagnostics.quad_error));
                }
                Err(e) => extra.push(fail("cor52", e)),
            }
        }
        let (r, alpha) = (2.0 * b.eta.max(1.0), 0.3);
        let mut worst: Option<(f64, f64)> = None;
        for y in sphere_points(x.len(), 8) {
            let spec = match PrismSpec::new(eps, r, alpha, y.clone()) {
                Ok(sp) => sp,
                Err(e) => {
                    extra.push(fail("lemma51", e));
                    break;
                }
            };
            match (
                prism_average_detail(phi, x, &spec, s, &cfg.prism_quad),
                line_average(phi, x, &y, s, eps, &cfg.opts.quad),
            ) {
                (Ok(pv), Ok(lv)) => {
                    let d = (pv.value - lv).abs();
                    if worst.is_none_or(|w| d > w.0) {
                        worst = Some((d, pv.error));
                    }
                }
                (Err(e), _) | (_, Err(e)) => {
                    extra.push(fail("lemma51", e));
                    break;
                }
            }
        }
        if let Some((d, err)) = worst {
            push("lemma51", d, lemma51_bound(&b, r, alpha), QUAD_ALLOWANCE * err + 1e-12);
        }
    }
    rows.extend(extra);
    rows
}

/// Checks measured expansion errors against the closed-form bounds on every
/// entry, order and radius.
pub fn audit_bounds(cfg: &AuditConfig) -> AuditTable {
    let entries: Vec<(String, TestFunction)> = if cfg.entries.is_empty() {
        catalog().into_iter().map(|t| (t.name.clone(), t)).collect()
    } else {
        cfg.entries
            .iter()
            .filter_map(|e| parse_entry(e).ok().map(|t| (e.clone(), t)))
            .collect()
    };
    let mut rows = Vec::new();
    for e in &cfg.entries {
        if let Err(err) = parse_entry(e) {
            rows.push(AuditRow {
                entry: e.clone(),
                s: f64::NAN,
                eps: f64::NAN,
                check: "entry".into(),
                lhs: None,
                bound: None,
                allowance: None,
                pass: false,
                note: Some(err.to_string()),
            });
        }
    }
    for (name, phi) in &entries {
        let x = phi.point.clone();
        let grid = default_eps_grid(phi.eta(&x), cfg.n_eps);
        for &s in &cfg.s_values {
            let lap = match lap_frac(phi, &x, s, &reference_opts(&cfg.opts)) {
                Ok(l) => l,
                Err(e) => {
                    rows.push(AuditRow {
                        entry: name.clone(),
                        s,
                        eps: f64::NAN,
                        check: "reference".into(),
                        lhs: None,
                        bound: None,
                        allowance: None,
                        pass: false,
                        note: Some(e.to_string()),
                    });
                    continue;
                }
            };
            let per_eps: Vec<Vec<AuditRow>> = grid.par_iter().map(|&eps| audit_point(name, phi, &x, s, eps, cfg, &lap)).collect();
            rows.extend(per_eps.into_iter().flatten());
        }
    }
    let violations = rows.iter().filter(|r| !r.pass).count();
    AuditTable { rows, violations }
}

/// Residuals of MVP1 and MVP2 at a fixed radius as `s → 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub s: f64,
    pub eps: f64,
    pub mvp1_residual: f64,
    pub mvp2_residual: f64,
    /// The `s → 1` limit of the MVP2 bound.
    pub limit: f64,
    pub mvp2_within_limit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTable {
    pub entry: String,
    pub point: Vec<f64>,
    pub rows: Vec<ProbeRow>,
    /// MVP1 residual at the largest `s` exceeds the one at the smallest.
    pub mvp1_grows: bool,
    pub mvp2_bounded: bool,
}

/// Tabulates both residuals over `s_values` at fixed `eps`. The MVP2 residual
/// is compared with `1.1×` the limit expression.
pub fn s_uniformity_probe(entry: &str, x: Option<&[f64]>, eps: f64, s_values: &[f64], opts: &EvalOpts) -> Result<ProbeTable> {
    let phi = parse_entry(entry)?;
    let x = x.map_or_else(|| phi.point.clone(), |p| p.to_vec());
    phi.check_point(&x)?;
    if s_values.is_empty() {
        return domain("probe needs at least one order");
    }
    let mut rows = Vec::new();
    for &s in s_values {
        let b = BoundInputs::from_entry(&phi, &x, s, eps)?;
        if b.p_norm <= crate::corelap::GRADIENT_ZERO_TOL {
            return Err(Error::Precondition("the probe needs a nonzero gradient".into()));
        }
        let lap = lap_frac(&phi, &x, s, &reference_opts(opts))?;
        let m = average_mixed_parts(&phi, &x, s, eps, opts)?;
        let cs = small_constant(s)?;
        let fx = m.nonlocal.phi_x;
        let r1 = m.nonlocal.average() - fx - eps.powf(2.0 * s) * lap.value / (cs * (1.0 - s));
        let r2 = m.value - fx - eps.powf(2.0 * s) * lap.value / cs;
        let limit = thm2_limit(&b);
        rows.push(ProbeRow {
            s,
            eps,
            mvp1_residual: r1,
            mvp2_residual: r2,
            limit,
            mvp2_within_limit: r2.abs() <= 1.1 * limit,
        });
    }
    let mvp1_grows = rows.last().map(|l| l.mvp1_residual.abs()) > rows.first().map(|f| f.mvp1_residual.abs());
    let mvp2_bounded = rows.last().is_some_and(|r| r.mvp2_within_limit);
    Ok(ProbeTable { entry: entry.into(), point: x, rows, mvp1_grows, mvp2_bounded })
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Domain(format!("csv output failed: {e}"))
}

/// Writes serializable flat rows as CSV with a header line.
pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Domain(format!("json output failed: {e}")))?;
    out.write_all(b"\n").map_err(|e| Error::Domain(format!("json output failed: {e}")))
}

/// Flattened rows of several reports.
pub fn report_rows(reports: &[ExpansionReport]) -> Vec<SweepRow> {
    reports.iter().flat_map(|r| r.rows.iter().cloned()).collect()
}
