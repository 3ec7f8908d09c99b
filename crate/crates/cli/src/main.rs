#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use fraclap::bounds::{
    cor32_breakdown, cor52_breakdown, cor52_schedule, due5_bound, lemma51_breakdown, otto_bound, prop41_bound, thm1_breakdown,
    thm2_breakdown, thm2_limit, BoundBreakdown, BoundInputs,
};
use fraclap::config::{parse_config, parse_list, parse_orders, parse_point, OutputFormat, RunConfig};
use fraclap::corelap::{average_mixed_parts, eps_parts, lap_frac, lap_frac_eps, midpoint_local, Branch, EvalOpts};
use fraclap::fracmeasure::{frac_constant_1d, frac_constant_1d_by_integral, frac_constant_nd, small_constant, QuadSpec};
use fraclap::harness::{
    audit_bounds, report_rows, run_sweep, s_uniformity_probe, write_csv, write_json, AuditConfig, AuditSuite, AverageKind,
    Schedule, SweepConfig,
};
use fraclap::prism::{average_prism_o, prism_contains, prism_measure, prism_stencil, write_stencil_csv, PrismQuad, PrismSpec};
use fraclap::sphereopt::Certificate;
use fraclap::testfuncs::{catalog, parse_entry, TestFunction};
use fraclap::Error;

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Violation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Domain(_) | Error::UnsupportedDimension(_) | Error::Precondition(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("i/o: {e}"))
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Violation(_) => 3,
        }
    }
}

type Outcome = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "fraclap", version, about = "Evaluate the fractional infinity-Laplacian and its nonlocal averages")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// C_s from the Gamma formula and the cosine integral, c_s and C(N,s)
    Constants(ConstantsArgs),
    /// One operator or average at one point
    Eval(EvalArgs),
    /// Residuals of an average over a radius grid, with fitted orders
    Sweep(SweepArgs),
    /// Measured errors against the closed-form bounds
    Audit(AuditArgs),
    /// MVP1 and MVP2 residuals at fixed radius as s grows
    Probe(ProbeArgs),
    /// Lattice points of a truncated prism (CSV)
    Stencil(StencilArgs),
    /// Bound breakdowns at one point (JSON)
    Bounds(BoundsArgs),
    /// Prism measure against a Monte-Carlo estimate
    Measure(MeasureArgs),
}

#[derive(Args, Clone, Default)]
struct OutArgs {
    /// Output file (stdout if absent)
    #[arg(long, short)]
    output: Option<String>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    /// JSON run configuration; flags take precedence
    #[arg(long)]
    config: Option<String>,
}

#[derive(Args)]
struct ConstantsArgs {
    /// Comma-separated orders in (1/2, 1)
    #[arg(long, default_value = "0.55,0.6,0.75,0.9,0.99")]
    s: String,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    entry: String,
    /// Evaluation point (the entry's designated point if absent)
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long, default_value_t = 0.75)]
    s: f64,
    /// lap, lap-eps, mvp1, mvp2, mvp3 or midpoint
    #[arg(long, default_value = "lap")]
    op: String,
    #[arg(long)]
    eps: Option<f64>,
    /// Prism length for mvp3 (schedule value if absent)
    #[arg(long)]
    r: Option<f64>,
    /// Prism aperture for mvp3 (schedule value if absent)
    #[arg(long)]
    alpha: Option<f64>,
    /// Relative quadrature tolerance
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, short)]
    output: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    entry: Option<String>,
    /// mvp1, mvp2, mvp3, midpoint or ball-mean
    #[arg(long = "avg")]
    average: Option<String>,
    #[arg(long)]
    s: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// Explicit radii
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    n_eps: Option<usize>,
    /// Fixed prism length for mvp3, instead of the schedule
    #[arg(long, requires = "alpha")]
    r: Option<f64>,
    #[arg(long, requires = "r")]
    alpha: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct AuditArgs {
    /// theorems, prism or all
    #[arg(long)]
    suite: Option<String>,
    /// Catalog entry, repeatable (the whole catalog if absent)
    #[arg(long = "entry")]
    entries: Vec<String>,
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    n_eps: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    entry: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long)]
    s: Option<String>,
    /// Use orders approaching 1
    #[arg(long)]
    s_limit: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct PrismArgs {
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true, default_value = "1,0")]
    axis: String,
    #[arg(long, default_value_t = 0.75)]
    s: f64,
}

#[derive(Args)]
struct StencilArgs {
    #[command(flatten)]
    prism: PrismArgs,
    /// Grid spacing
    #[arg(long)]
    h: f64,
    #[arg(long, short)]
    output: Option<String>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    entry: String,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long, default_value_t = 0.75)]
    s: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 2.0)]
    r: f64,
    #[arg(long, default_value_t = 0.3)]
    alpha: f64,
    #[arg(long, short)]
    output: Option<String>,
}

#[derive(Args)]
struct MeasureArgs {
    #[command(flatten)]
    prism: PrismArgs,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = set_threads().and_then(|_| match cli.cmd {
        Cmd::Constants(a) => cmd_constants(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Audit(a) => cmd_audit(a),
        Cmd::Probe(a) => cmd_probe(a),
        Cmd::Stencil(a) => cmd_stencil(a),
        Cmd::Bounds(a) => cmd_bounds(a),
        Cmd::Measure(a) => cmd_measure(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fraclap: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn set_threads() -> Outcome {
    let Ok(v) = std::env::var("FRACLAP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Usage(format!("FRACLAP_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))
}

fn sink(path: Option<&str>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Failure::Usage(format!("cannot create {p}: {e}")))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_config(out: &OutArgs) -> Result<RunConfig, Failure> {
    match &out.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {path}: {e}")))?;
            Ok(parse_config(&text)?)
        }
        None => Ok(RunConfig::new()),
    }
}

/// Flags common to the report commands, laid over the config file.
fn merged(out: &OutArgs, flags: RunConfig) -> Result<RunConfig, Failure> {
    let format = out.format.as_deref().map(OutputFormat::parse).transpose()?;
    let flags = RunConfig { output: out.output.clone(), format, ..flags };
    let cfg = load_config(out)?.overlay(flags);
    cfg.validate()?;
    Ok(cfg)
}

fn emit<T: Serialize>(cfg: &RunConfig, rows: &[T], doc: &impl Serialize) -> Outcome {
    let mut w = sink(cfg.output.as_deref())?;
    match cfg.format.unwrap_or_default() {
        OutputFormat::Csv => write_csv(&mut w, rows)?,
        OutputFormat::Json => write_json(&mut w, doc)?,
    }
    w.flush()?;
    Ok(())
}

fn entry_and_point(entry: &str, x: Option<&[f64]>) -> Result<(TestFunction, Vec<f64>), Failure> {
    let phi = parse_entry(entry).map_err(|e| {
        let names: Vec<String> = catalog().into_iter().map(|t| t.name).collect();
        Failure::Usage(format!("{e}; catalog: {}", names.join(", ")))
    })?;
    let x = x.map_or_else(|| phi.point.clone(), |p| p.to_vec());
    phi.check_point(&x)?;
    Ok((phi, x))
}

#[derive(Serialize)]
struct Document<'a, C: Serialize, T: Serialize> {
    schema: u32,
    command: &'a str,
    config: &'a C,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    results: &'a T,
}

fn document<'a, C: Serialize, T: Serialize>(command: &'a str, config: &'a C, results: &'a T) -> Document<'a, C, T> {
    Document { schema: fraclap::config::SCHEMA_VERSION, command, config, seed: None, results }
}

#[derive(Serialize)]
struct ConstantRow {
    s: f64,
    c_s_gamma: f64,
    c_s_integral: f64,
    rel_diff: f64,
    formulas_agree: bool,
    small_c_s: f64,
    interval_ok: bool,
    c_n1: f64,
    c_n2: f64,
    c_n3: f64,
}

fn cmd_constants(a: ConstantsArgs) -> Outcome {
    let s_list = parse_orders(&a.s)?;
    let cfg = merged(&a.out, RunConfig { s: Some(s_list.clone()), ..RunConfig::new() })?;
    let (lo, hi) = ((12.0f64 / 13.0).powi(2), (12.0f64 / 5.0).powi(2));
    let mut rows = Vec::new();
    for &s in cfg.s.as_deref().unwrap_or(&s_list) {
        let g = frac_constant_1d(s)?;
        let i = frac_constant_1d_by_integral(s, &QuadSpec::default())?;
        let c = small_constant(s)?;
        let rel = (g - i).abs() / g.abs();
        rows.push(ConstantRow {
            s,
            c_s_gamma: g,
            c_s_integral: i,
            rel_diff: rel,
            formulas_agree: rel <= 1e-8,
            small_c_s: c,
            interval_ok: lo < c && c < hi,
            c_n1: frac_constant_nd(1, s)?,
            c_n2: frac_constant_nd(2, s)?,
            c_n3: frac_constant_nd(3, s)?,
        });
    }
    emit(&cfg, &rows, &document("constants", &cfg, &rows))?;
    if rows.iter().all(|r| r.formulas_agree && r.interval_ok) {
        Ok(())
    } else {
        Err(Failure::Violation("a constants check failed".into()))
    }
}

#[derive(Serialize, Default)]
struct EvalReport {
    entry: String,
    x: Vec<f64>,
    s: f64,
    op: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    normalized: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    branch: Option<Branch>,
    quad_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    argsup: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    arginf: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mvp1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    midpoint: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prism: Option<(f64, f64)>,
}

fn cmd_eval(a: EvalArgs) -> Outcome {
    let x = a.x.as_deref().map(parse_point).transpose()?;
    let (phi, x) = entry_and_point(&a.entry, x.as_deref())?;
    let mut opts = EvalOpts::default();
    if let Some(t) = a.tol {
        opts.quad.rel_tol = t;
    }
    let need_eps = || a.eps.ok_or_else(|| Failure::Usage(format!("--eps is required for --op {}", a.op)));
    let mut rep = EvalReport { entry: a.entry.clone(), x: x.clone(), s: a.s, op: a.op.clone(), ..Default::default() };
    match a.op.as_str() {
        "lap" | "lap-eps" => {
            let v = if a.op == "lap" {
                lap_frac(&phi, &x, a.s, &opts)?
            } else {
                let eps = need_eps()?;
                rep.eps = Some(eps);
                lap_frac_eps(&phi, &x, a.s, eps, &opts)?
            };
            rep.value = v.value;
            rep.normalized = Some(v.normalized(a.s)?);
            rep.branch = Some(v.branch);
            rep.quad_error = v.diagnostics.quad_error;
            rep.certificate = v.diagnostics.certificate;
            rep.argsup = v.diagnostics.argsup;
            rep.arginf = v.diagnostics.arginf;
        }
        "mvp1" => {
            let eps = need_eps()?;
            let p = eps_parts(&phi, &x, a.s, eps, &opts)?;
            rep.eps = Some(eps);
            rep.value = p.average();
            rep.quad_error = p.quad_error / p.mass;
            rep.certificate = Some(p.certificate);
            rep.argsup = Some(p.argsup);
            rep.arginf = Some(p.arginf);
        }
        "mvp2" => {
            let eps = need_eps()?;
            let m = average_mixed_parts(&phi, &x, a.s, eps, &opts)?;
            rep.eps = Some(eps);
            rep.value = m.value;
            rep.mvp1 = Some(m.nonlocal.average());
            rep.midpoint = Some(m.midpoint);
            rep.quad_error = (1.0 - a.s) * m.nonlocal.quad_error / m.nonlocal.mass;
            rep.certificate = Some(m.nonlocal.certificate);
            rep.argsup = Some(m.nonlocal.argsup);
            rep.arginf = Some(m.nonlocal.arginf);
        }
        "mvp3" => {
            let eps = need_eps()?;
            let (r, alpha) = match (a.r, a.alpha) {
                (Some(r), Some(al)) => (r, al),
                (r, al) => {
                    let (sr, sa) = cor52_schedule(eps, a.s)?;
                    (r.unwrap_or(sr), al.unwrap_or(sa))
                }
            };
            let quad = if x.len() == 3 { PrismQuad::light() } else { PrismQuad::default() };
            let p = average_prism_o(&phi, &x, eps, r, alpha, a.s, &quad, &opts.sphere)?;
            rep.eps = Some(eps);
            rep.value = p.value;
            rep.quad_error = p.quad_error;
            rep.argsup = Some(p.argsup);
            rep.arginf = Some(p.arginf);
            rep.prism = Some((r, alpha));
        }
        "midpoint" => {
            let eps = need_eps()?;
            rep.eps = Some(eps);
            rep.value = midpoint_local(&phi, &x, eps, &opts)?;
        }
        other => return Err(Failure::Usage(format!("unknown op '{other}' (expected lap, lap-eps, mvp1, mvp2, mvp3 or midpoint)"))),
    }
    let mut w = sink(a.output.as_deref())?;
    write_json(&mut w, &rep)?;
    w.flush()?;
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Outcome {
    let flags = RunConfig {
        entry: a.entry.clone(),
        average: a.average.clone(),
        s: a.s.as_deref().map(parse_orders).transpose()?,
        point: a.x.as_deref().map(parse_point).transpose()?,
        eps: a.eps.as_deref().map(parse_list).transpose()?,
        n_eps: a.n_eps,
        ..RunConfig::new()
    };
    let cfg = merged(&a.out, flags)?;
    let mut sweep = SweepConfig::default();
    if let Some(e) = &cfg.entry {
        sweep.entry = e.clone();
    }
    if let Some(avg) = &cfg.average {
        sweep.average = AverageKind::parse(avg)?;
    }
    if let Some(s) = &cfg.s {
        sweep.s_values = s.clone();
    }
    sweep.point = cfg.point.clone();
    sweep.eps = cfg.eps.clone();
    if let Some(n) = cfg.n_eps {
        sweep.n_eps = n;
    }
    if let (Some(r), Some(alpha)) = (a.r, a.alpha) {
        sweep.schedule = Schedule::Fixed { r, alpha };
    }
    entry_and_point(&sweep.entry, sweep.point.as_deref())?;
    let reports = run_sweep(&sweep)?;
    for r in &reports {
        let fit = r.fit.map_or("none".to_string(), |f| if f.exact_zero { "exact".into() } else { format!("{:.4}", f.order) });
        eprintln!(
            "{} {} s={} order={} expected>={:.2} bounds={} {}",
            r.entry,
            r.average.name(),
            r.s,
            fit,
            r.expected_order - r.average.order_tol(),
            if r.bounds_ok { "ok" } else { "violated" },
            if r.passed() { "PASS" } else { "FAIL" }
        );
    }
    emit(&cfg, &report_rows(&reports), &document("sweep", &sweep, &reports))?;
    if let Some(row) = reports.iter().flat_map(|r| &r.rows).find(|r| r.error.is_some()) {
        return Err(Failure::Numerical(format!("row at eps = {} failed: {}", row.eps, row.error.as_deref().unwrap_or(""))));
    }
    if reports.iter().all(|r| r.passed()) {
        Ok(())
    } else {
        Err(Failure::Violation("some sweep checks failed".into()))
    }
}

fn cmd_audit(a: AuditArgs) -> Outcome {
    let flags = RunConfig {
        suite: a.suite.clone(),
        entries: (!a.entries.is_empty()).then(|| a.entries.clone()),
        s: a.s.as_deref().map(parse_orders).transpose()?,
        n_eps: a.n_eps,
        ..RunConfig::new()
    };
    let cfg = merged(&a.out, flags)?;
    let mut audit = AuditConfig::default();
    if let Some(s) = &cfg.suite {
        audit.suite = AuditSuite::parse(s)?;
    }
    if let Some(e) = &cfg.entries {
        for name in e {
            entry_and_point(name, None)?;
        }
        audit.entries = e.clone();
    }
    if let Some(s) = &cfg.s {
        audit.s_values = s.clone();
    }
    if let Some(n) = cfg.n_eps {
        audit.n_eps = n;
    }
    let table = audit_bounds(&audit);
    eprintln!("{} checks, {} violations", table.rows.len(), table.violations);
    emit(&cfg, &table.rows, &document("audit", &audit, &table))?;
    if table.violations == 0 {
        Ok(())
    } else {
        Err(Failure::Violation(format!("{} bound violations", table.violations)))
    }
}

fn cmd_probe(a: ProbeArgs) -> Outcome {
    let s_values = match (&a.s, a.s_limit) {
        (Some(s), _) => parse_orders(s)?,
        (None, true) => vec![0.6, 0.75, 0.9, 0.95, 0.99],
        (None, false) => vec![0.6, 0.75, 0.9],
    };
    let flags = RunConfig {
        entry: a.entry.clone(),
        point: a.x.as_deref().map(parse_point).transpose()?,
        s: Some(s_values),
        ..RunConfig::new()
    };
    let cfg = merged(&a.out, flags)?;
    let entry = cfg.entry.clone().unwrap_or_else(|| "cutquad:kind=identity".into());
    entry_and_point(&entry, cfg.point.as_deref())?;
    let table = s_uniformity_probe(&entry, cfg.point.as_deref(), a.eps, cfg.s.as_deref().unwrap_or(&[]), &EvalOpts::default())?;
    emit(&cfg, &table.rows, &document("probe", &cfg, &table))?;
    if table.mvp2_bounded {
        Ok(())
    } else {
        Err(Failure::Violation("MVP2 residual exceeds 1.1x the limit expression".into()))
    }
}

fn prism_spec(p: &PrismArgs) -> Result<PrismSpec, Failure> {
    let axis = parse_point(&p.axis)?;
    let n = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n > 0.0) {
        return Err(Failure::Usage("axis must be nonzero".into()));
    }
    Ok(PrismSpec::new(p.eps, p.r, p.alpha, axis.iter().map(|v| v / n).collect())?)
}

fn cmd_stencil(a: StencilArgs) -> Outcome {
    let spec = prism_spec(&a.prism)?;
    let st = prism_stencil(&spec, a.h, a.prism.s)?;
    if st.is_empty() {
        return Err(Error::DegenerateStencil { h: a.h, eps: spec.eps, alpha: spec.alpha }.into());
    }
    let mut w = sink(a.output.as_deref())?;
    write_stencil_csv(&mut w, &st)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BoundEntry {
    name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    total: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    terms: Vec<(String, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    not_applicable: Option<String>,
}

impl BoundEntry {
    fn from_breakdown(name: &str, r: fraclap::Result<BoundBreakdown>) -> Self {
        match r {
            Ok(b) => BoundEntry { name: name.into(), total: Some(b.total), terms: b.terms, not_applicable: None },
            Err(e) => BoundEntry { name: name.into(), total: None, terms: Vec::new(), not_applicable: Some(e.to_string()) },
        }
    }

    fn from_value(name: &str, r: fraclap::Result<f64>) -> Self {
        Self::from_breakdown(name, r.map(|v| BoundBreakdown { name: name.into(), terms: Vec::new(), total: v }))
    }
}

#[derive(Serialize)]
struct BoundsReport {
    entry: String,
    x: Vec<f64>,
    s: f64,
    eps: f64,
    eta: f64,
    c_x: f64,
    p_norm: f64,
    bounds: Vec<BoundEntry>,
}

fn cmd_bounds(a: BoundsArgs) -> Outcome {
    let x = a.x.as_deref().map(parse_point).transpose()?;
    let (phi, x) = entry_and_point(&a.entry, x.as_deref())?;
    let b = BoundInputs::from_entry(&phi, &x, a.s, a.eps)?;
    let bounds = vec![
        BoundEntry::from_breakdown("thm1", thm1_breakdown(&b)),
        BoundEntry::from_breakdown("thm2", thm2_breakdown(&b)),
        BoundEntry::from_value("thm2_limit", Ok(thm2_limit(&b))),
        BoundEntry::from_breakdown("cor32", cor32_breakdown(&b)),
        BoundEntry::from_value("due5", due5_bound(&b)),
        BoundEntry::from_value("otto", otto_bound(&b)),
        BoundEntry::from_value("prop41", prop41_bound(&b)),
        BoundEntry::from_breakdown("lemma51", lemma51_breakdown(&b, a.r, a.alpha)),
        BoundEntry::from_breakdown("cor52", cor52_breakdown(&b)),
    ];
    let rep = BoundsReport { entry: a.entry, x, s: a.s, eps: a.eps, eta: b.eta, c_x: b.c_x, p_norm: b.p_norm, bounds };
    let mut w = sink(a.output.as_deref())?;
    write_json(&mut w, &rep)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct MeasureRow {
    dim: usize,
    s: f64,
    eps: f64,
    r: f64,
    alpha: f64,
    exact: f64,
    monte_carlo: f64,
    std_error: f64,
    z: f64,
    samples: usize,
    seed: u64,
}

fn cmd_measure(a: MeasureArgs) -> Outcome {
    let spec = prism_spec(&a.prism)?;
    let s = a.prism.s;
    let cfg = merged(&a.out, RunConfig { seed: a.seed, ..RunConfig::new() })?;
    let seed = cfg.seed.unwrap_or(0);
    if a.samples < 2 {
        return Err(Failure::Usage("need at least 2 samples".into()));
    }
    let exact = prism_measure(&spec, s)?;
    let dim = spec.axis.len();
    let c = frac_constant_nd(dim, s)?;
    let vol = (2.0 * spec.r).powi(dim as i32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum2) = (0.0, 0.0);
    let mut z = vec![0.0; dim];
    for _ in 0..a.samples {
        for v in z.iter_mut() {
            *v = rng.gen_range(-spec.r..spec.r);
        }
        let v = if prism_contains(&spec, &z) {
            c * vol * z.iter().map(|t| t * t).sum::<f64>().sqrt().powf(-(dim as f64) - 2.0 * s)
        } else {
            0.0
        };
        sum += v;
        sum2 += v * v;
    }
    let n = a.samples as f64;
    let mean = sum / n;
    let se = ((sum2 / n - mean * mean).max(0.0) / n).sqrt();
    let row = MeasureRow {
        dim,
        s,
        eps: spec.eps,
        r: spec.r,
        alpha: spec.alpha,
        exact,
        monte_carlo: mean,
        std_error: se,
        z: if se > 0.0 { (mean - exact) / se } else { 0.0 },
        samples: a.samples,
        seed,
    };
    let rows = [row];
    let mut doc = document("measure", &cfg, &rows);
    doc.seed = Some(seed);
    emit(&cfg, &rows, &doc)
}
