//! Fractional-order constants and quadrature against the one-dimensional
//! measure `dμ_s(t) = C_s t^{-1-2s} dt` on `(0, ∞)`.
//!
//! The quadrature splits the half line into four regions:
//!
//! * `(0, a0)`: a Gauss–Jacobi rule for the weight `t^{1-2s}` applied to
//!   `f(t)/t²`, valid when `f` is smooth and `O(t²)` at the origin. The cut
//!   `a0` starts at `inner_cut` and is halved until the rule converges.
//! * `(a0, inner_cut)`: geometrically graded panels, bisected adaptively.
//! * `(inner_cut, truncation_radius)`: the same panels continued outwards.
//! * `(truncation_radius, ∞)`: the substitution `u = t^{-2s}`, under which
//!   `dμ_s` becomes `C_s/(2s) du`; integrated over dyadic blocks in `u` with
//!   Aitken extrapolation of the partial sums. Callers who know the tail in
//!   closed form can supply it instead.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::gauss::{gauss_legendre, integrate_gl, power_weight_unit};
use crate::special::gamma;

/// Lower end of the footnote interval for `c_s`.
pub const SMALL_CONSTANT_MIN: f64 = (12.0 / 13.0) * (12.0 / 13.0);
/// Upper end of the footnote interval for `c_s`.
pub const SMALL_CONSTANT_MAX: f64 = (12.0 / 5.0) * (12.0 / 5.0);

/// Fractional order with its derived normalization constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub s: f64,
    pub dim: usize,
    /// `C_s`.
    pub c_big: f64,
    /// `c_s = C_s / (s(1-s))`.
    pub c_small: f64,
    /// `C(N, s)`.
    pub c_nd: f64,
}

impl FracParams {
    pub fn new(s: f64, dim: usize) -> Result<Self> {
        check_order(s)?;
        let c_big = frac_constant_1d(s)?;
        Ok(Self {
            s,
            dim,
            c_big,
            c_small: c_big / (s * (1.0 - s)),
            c_nd: frac_constant_nd(dim, s)?,
        })
    }
}

pub(crate) fn check_order(s: f64) -> Result<()> {
    if !(s > 0.5 && s < 1.0) {
        return domain(format!("fractional order s = {s} must lie in (1/2, 1)"));
    }
    Ok(())
}

fn gamma_formula(half_dim: f64, s: f64) -> f64 {
    4f64.powf(s) * s * gamma(half_dim + s) / (PI.powf(half_dim) * gamma(1.0 - s))
}

/// `C_s = 4^s s Γ(1/2+s) / (π^{1/2} Γ(1-s))`.
pub fn frac_constant_1d(s: f64) -> Result<f64> {
    check_order(s)?;
    Ok(gamma_formula(0.5, s))
}

/// `C(N, s) = 4^s s Γ(N/2+s) / (π^{N/2} Γ(1-s))`; equals [`frac_constant_1d`]
/// bit for bit when `N = 1`.
pub fn frac_constant_nd(dim: usize, s: f64) -> Result<f64> {
    check_order(s)?;
    if dim == 0 {
        return domain("dimension must be at least 1");
    }
    Ok(gamma_formula(dim as f64 / 2.0, s))
}

/// `c_s = C_s / (s(1-s))`.
pub fn small_constant(s: f64) -> Result<f64> {
    Ok(frac_constant_1d(s)? / (s * (1.0 - s)))
}

/// `C_s` from its integral characterization `(2 ∫_0^∞ (1 - cos t) t^{-1-2s} dt)^{-1}`,
/// evaluated with the singular quadrature of this module.
pub fn frac_constant_1d_by_integral(s: f64, spec: &QuadSpec) -> Result<f64> {
    check_order(s)?;
    let tail = |t0: f64| -cosine_power_tail(0.0, 1.0, s, t0, 1.0) + t0.powf(-2.0 * s) / (2.0 * s);
    let r = power_weight_integral(&|t: f64| 2.0 * (0.5 * t).sin().powi(2), Some(&tail), s, 0.0, f64::INFINITY, spec)?;
    Ok(1.0 / (2.0 * r.value))
}

/// `μ_s(a, b) = C_s (a^{-2s} - b^{-2s}) / (2s)`, with `b = ∞` allowed.
pub fn mu_mass(s: f64, a: f64, b: f64) -> Result<f64> {
    let c = frac_constant_1d(s)?;
    if !(a > 0.0) {
        return Err(Error::Divergent(format!(
            "μ_s(a, b) with a = {a}: the measure of a neighbourhood of 0 is infinite"
        )));
    }
    if !(b > a) {
        return domain(format!("mu_mass needs a < b, got a = {a}, b = {b}"));
    }
    let upper = if b.is_infinite() { 0.0 } else { b.powf(-2.0 * s) };
    Ok(c * (a.powf(-2.0 * s) - upper) / (2.0 * s))
}

/// `∫_a^b t^k dμ_s(t)` for `k ∈ {1, 2}` in closed form.
pub fn mu_moment(s: f64, k: u32, a: f64, b: f64) -> Result<f64> {
    let c = frac_constant_1d(s)?;
    if b.is_infinite() {
        return Err(Error::Divergent(format!("moment of order {k} over (a, ∞)")));
    }
    if a < 0.0 || b < a {
        return domain(format!("mu_moment needs 0 <= a <= b, got a = {a}, b = {b}"));
    }
    match k {
        1 => {
            if a == 0.0 {
                return Err(Error::Divergent("first moment near 0 diverges for s > 1/2".into()));
            }
            Ok(c * (a.powf(1.0 - 2.0 * s) - b.powf(1.0 - 2.0 * s)) / (2.0 * s - 1.0))
        }
        2 => Ok(c * (b.powf(2.0 - 2.0 * s) - a.powf(2.0 - 2.0 * s)) / (2.0 - 2.0 * s)),
        _ => domain(format!("moment order {k} not supported (1 or 2)")),
    }
}

/// Singular-quadrature configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub inner_cut: f64,
    pub truncation_radius: f64,
    pub panels_per_decade: usize,
    pub nodes_per_panel: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Total number of accepted panels before giving up.
    pub max_panels: usize,
    /// Magnitude of the terms that cancel inside the integrand. Refinement
    /// stops once a panel's difference is at the rounding level of this scale.
    #[serde(default)]
    pub noise_scale: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            inner_cut: 1.0,
            truncation_radius: 64.0,
            panels_per_decade: 4,
            nodes_per_panel: 16,
            rel_tol: 1e-9,
            abs_tol: 1e-13,
            max_panels: 400_000,
            noise_scale: 0.0,
        }
    }
}

impl QuadSpec {
    /// Tight settings used for reference values.
    pub fn tight() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-15,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return domain("rel_tol and abs_tol must be positive");
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return domain("noise_scale must be finite and nonnegative");
        }
        if self.nodes_per_panel < 4 {
            return domain("nodes_per_panel must be at least 4");
        }
        if self.panels_per_decade < 2 {
            return domain("panels_per_decade must be at least 2");
        }
        if !(self.inner_cut > 0.0 && self.truncation_radius > self.inner_cut) {
            return domain("need 0 < inner_cut < truncation_radius");
        }
        Ok(())
    }
}

/// Value with an error indicator (sum of local refinement differences).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

impl QuadResult {
    fn add(&mut self, other: QuadResult) {
        self.value += other.value;
        self.error += other.error;
    }

    fn scaled(self, k: f64) -> Self {
        Self {
            value: self.value * k,
            error: self.error * k.abs(),
        }
    }
}

/// A closed-form tail: `T ↦ ∫_T^∞ f(t) t^{-1-2s} dt` (without `C_s`).
pub type TailFn<'a> = &'a dyn Fn(f64) -> f64;

/// `∫_lower^∞ f(t) dμ_s(t)`.
pub fn quad_mu_line(f: &dyn Fn(f64) -> f64, s: f64, lower: f64, spec: &QuadSpec) -> Result<QuadResult> {
    quad_mu_line_with_tail(f, None, s, lower, spec)
}

/// `∫_lower^∞ f(t) dμ_s(t)` using a known tail beyond `truncation_radius`.
pub fn quad_mu_line_with_tail(
    f: &dyn Fn(f64) -> f64,
    tail: Option<TailFn<'_>>,
    s: f64,
    lower: f64,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    let c = frac_constant_1d(s)?;
    Ok(power_weight_integral(f, tail, s, lower, f64::INFINITY, spec)?.scaled(c))
}

/// `∫_a^b f(t) dμ_s(t)` over a bounded interval.
pub fn quad_mu_interval(f: &dyn Fn(f64) -> f64, s: f64, a: f64, b: f64, spec: &QuadSpec) -> Result<QuadResult> {
    if !b.is_finite() {
        return domain("quad_mu_interval needs a finite upper limit");
    }
    let c = frac_constant_1d(s)?;
    Ok(power_weight_integral(f, None, s, a, b, spec)?.scaled(c))
}

struct Budget {
    used: usize,
    max: usize,
}

/// `∫_lower^upper f(t) t^{-1-2s} dt` with `upper` possibly infinite.
pub fn power_weight_integral(
    f: &dyn Fn(f64) -> f64,
    tail: Option<TailFn<'_>>,
    s: f64,
    lower: f64,
    upper: f64,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    check_order(s)?;
    spec.validate()?;
    if !(lower >= 0.0) || !(upper > lower) {
        return domain(format!("integration limits must satisfy 0 <= lower < upper, got ({lower}, {upper})"));
    }
    let mut budget = Budget { used: 0, max: spec.max_panels };
    let mut total = QuadResult::default();
    let weighted = |t: f64| f(t) * t.powf(-1.0 - 2.0 * s);

    let mut start = lower;
    if lower == 0.0 {
        let (origin, a0) = origin_region(f, s, upper.min(spec.inner_cut), spec)?;
        total.add(origin);
        start = a0;
    }

    let finite_end = if upper.is_finite() {
        upper
    } else {
        spec.truncation_radius.max(start)
    };
    if finite_end > start {
        let ratio = 10f64.powf(1.0 / spec.panels_per_decade as f64);
        let mut breaks = vec![start];
        // Geometric breakpoints anchored at inner_cut.
        let k_lo = (start / spec.inner_cut).ln() / ratio.ln();
        let k_hi = (finite_end / spec.inner_cut).ln() / ratio.ln();
        let mut k = k_lo.floor() as i64 + 1;
        while (k as f64) < k_hi {
            let b = spec.inner_cut * ratio.powi(k as i32);
            if b > start * (1.0 + 1e-12) && b < finite_end * (1.0 - 1e-12) {
                breaks.push(b);
            }
            k += 1;
        }
        breaks.push(finite_end);
        let panel_tol = spec.abs_tol / breaks.len() as f64;
        let noise = spec.noise_scale * NOISE_ULPS * f64::EPSILON;
        let floor = |a: f64, b: f64| noise * (a.powf(-2.0 * s) - b.powf(-2.0 * s)) / (2.0 * s);
        for w in breaks.windows(2) {
            let r = adaptive_panel(&weighted, w[0], w[1], spec, panel_tol, &floor, 0, (f64::INFINITY, f64::INFINITY), &mut budget);
            match r {
                Ok(r) => total.add(r),
                Err(partial) => {
                    total.add(partial);
                    return Err(Error::Convergence {
                        reason: format!("panel budget of {} exhausted", spec.max_panels),
                        estimate: total.value,
                        error: total.error,
                    });
                }
            }
        }
    }

    if upper.is_infinite() {
        let t0 = finite_end;
        match tail {
            Some(tail) => total.add(QuadResult { value: tail(t0), error: 0.0 }),
            None => {
                let r = substituted_tail(f, s, t0, spec, &mut budget, total.value);
                match r {
                    Ok(r) => total.add(r),
                    Err((partial, reason)) => {
                        total.add(partial);
                        return Err(Error::Convergence {
                            reason,
                            estimate: total.value,
                            error: total.error,
                        });
                    }
                }
            }
        }
    }
    Ok(total)
}

const ORIGIN_SAFE: f64 = 5e-4;

/// Rounding level of one integrand value, in units of `noise_scale · EPSILON`.
const NOISE_ULPS: f64 = 32.0;

/// Gauss–Jacobi treatment of `(0, a0)`; returns the integral and the final cut.
///
/// The cut is halved while the two rule orders disagree. Cancellation in
/// `f(t)/t²` grows as the cut shrinks, so once halving stops helping the best
/// cut seen so far is kept.
fn origin_region(f: &dyn Fn(f64) -> f64, s: f64, mut a0: f64, spec: &QuadSpec) -> Result<(QuadResult, f64)> {
    let beta = 1.0 - 2.0 * s;
    let n = spec.nodes_per_panel;
    let coarse_rule = power_weight_unit(n, beta);
    let fine_rule = power_weight_unit(n + 8, beta);
    // Below `t_safe` the quotient f(t)/t² is dominated by rounding in f, so it
    // is replaced by the quadratic through its values at t_safe, 2t_safe, 3t_safe.
    // This matters as s → 1, where the weight piles its mass near 0.
    let t_safe = ORIGIN_SAFE * spec.inner_cut;
    let q: [f64; 3] = std::array::from_fn(|k| {
        let t = (k + 1) as f64 * t_safe;
        f(t) / (t * t)
    });
    let g = |t: f64| -> f64 {
        if t >= t_safe {
            return f(t) / (t * t);
        }
        let u = t / t_safe;
        // Lagrange basis on nodes 1, 2, 3.
        let l1 = 0.5 * (u - 2.0) * (u - 3.0);
        let l2 = -(u - 1.0) * (u - 3.0);
        let l3 = 0.5 * (u - 1.0) * (u - 2.0);
        l1 * q[0] + l2 * q[1] + l3 * q[2]
    };
    let apply = |rule: &crate::gauss::Rule, a: f64| -> f64 {
        let sum: f64 = rule.nodes.iter().zip(&rule.weights).map(|(tau, w)| w * g(a * tau)).sum();
        sum * a.powf(2.0 - 2.0 * s)
    };
    let mut best: Option<(QuadResult, f64)> = None;
    let mut stalls = 0;
    for _ in 0..40 {
        let coarse = apply(&coarse_rule, a0);
        let fine = apply(&fine_rule, a0);
        let diff = (fine - coarse).abs();
        if !diff.is_finite() {
            break;
        }
        let r = QuadResult { value: fine, error: diff };
        if diff <= spec.abs_tol.max(spec.rel_tol * fine.abs()) {
            return Ok((r, a0));
        }
        let roundoff_regime = diff <= 1e-6 * fine.abs().max(1.0);
        match best {
            Some((b, _)) if roundoff_regime && diff >= 0.5 * b.error => {
                stalls += 1;
                if stalls >= 3 {
                    break;
                }
            }
            _ => {
                stalls = 0;
                best = Some((r, a0));
            }
        }
        a0 *= 0.5;
    }
    match best {
        Some((r, a)) if r.error <= 1e-6 * r.value.abs().max(1.0) + spec.abs_tol => Ok((r, a)),
        Some((r, _)) => Err(Error::Convergence {
            reason: "origin rule did not converge; integrand may not be smooth and O(t^2) at 0".into(),
            estimate: r.value,
            error: r.error,
        }),
        None => Err(Error::Convergence {
            reason: "origin rule produced non-finite values".into(),
            estimate: f64::NAN,
            error: f64::NAN,
        }),
    }
}

#[allow(clippy::too_many_arguments)]
fn adaptive_panel(
    g: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    spec: &QuadSpec,
    tol: f64,
    floor: &dyn Fn(f64, f64) -> f64,
    depth: usize,
    (parent_diff, grand_diff): (f64, f64),
    budget: &mut Budget,
) -> std::result::Result<QuadResult, QuadResult> {
    let rule = gauss_legendre(spec.nodes_per_panel);
    let mid = 0.5 * (a + b);
    let whole = integrate_gl(rule, a, b, g);
    let left = integrate_gl(rule, a, mid, g);
    let right = integrate_gl(rule, mid, b, g);
    let halves = left + right;
    let diff = (whole - halves).abs();
    let l1 = integrate_gl(rule, a, b, |t| g(t).abs());
    budget.used += 1;
    // A refinement that no longer shrinks the difference is limited by
    // cancellation in the integrand, not by resolution.
    let stalled = depth > 6 && diff > 0.9 * parent_diff && parent_diff > 0.9 * grand_diff;
    let accept = diff <= tol.max(spec.rel_tol * l1).max(floor(a, b)) || stalled || depth >= 48 || mid <= a || mid >= b;
    if accept {
        return Ok(QuadResult { value: halves, error: diff });
    }
    if budget.used >= budget.max {
        return Err(QuadResult { value: halves, error: diff });
    }
    let mut acc = QuadResult::default();
    match adaptive_panel(g, a, mid, spec, 0.5 * tol, floor, depth + 1, (diff, parent_diff), budget) {
        Ok(r) => acc.add(r),
        Err(r) => {
            acc.add(r);
            acc.add(QuadResult { value: right, error: diff });
            return Err(acc);
        }
    }
    match adaptive_panel(g, mid, b, spec, 0.5 * tol, floor, depth + 1, (diff, parent_diff), budget) {
        Ok(r) => acc.add(r),
        Err(r) => {
            acc.add(r);
            return Err(acc);
        }
    }
    Ok(acc)
}

/// Tail beyond `t0` in the variable `u = t^{-2s}`.
fn substituted_tail(
    f: &dyn Fn(f64) -> f64,
    s: f64,
    t0: f64,
    spec: &QuadSpec,
    budget: &mut Budget,
    running: f64,
) -> std::result::Result<QuadResult, (QuadResult, String)> {
    let inv = -1.0 / (2.0 * s);
    let h = |u: f64| f(u.powf(inv));
    let u0 = t0.powf(-2.0 * s);
    let scale = 1.0 / (2.0 * s);
    let mut partial = 0.0;
    let mut err = 0.0;
    let mut sums: Vec<f64> = Vec::new();
    let mut extrapolated: Vec<f64> = Vec::new();
    let noise = spec.noise_scale * NOISE_ULPS * f64::EPSILON;
    let floor = |a: f64, b: f64| noise * (b - a);
    let mut hi = u0;
    for _block in 0..400 {
        let lo = 0.5 * hi;
        let tol = spec.abs_tol / 64.0;
        let block = match adaptive_panel(&h, lo, hi, spec, tol, &floor, 0, (f64::INFINITY, f64::INFINITY), budget) {
            Ok(r) => r,
            Err(r) => {
                partial += r.value;
                return Err((
                    QuadResult { value: partial * scale, error: (err + r.error) * scale },
                    format!("panel budget of {} exhausted in the tail", spec.max_panels),
                ));
            }
        };
        partial += block.value;
        err += block.error;
        sums.push(partial);
        let n = sums.len();
        let est = if n >= 3 {
            let d1 = sums[n - 2] - sums[n - 3];
            let d2 = sums[n - 1] - sums[n - 2];
            let rho = if d1 != 0.0 { d2 / d1 } else { f64::NAN };
            if rho > 0.0 && rho < 0.9 {
                partial + d2 * rho / (1.0 - rho)
            } else {
                partial
            }
        } else {
            partial
        };
        extrapolated.push(est);
        let m = extrapolated.len();
        if m >= 3 {
            let tol = (spec.abs_tol / scale).max(spec.rel_tol * (running / scale + est).abs());
            let c1 = (extrapolated[m - 1] - extrapolated[m - 2]).abs();
            let c2 = (extrapolated[m - 2] - extrapolated[m - 3]).abs();
            if c1 <= tol && c2 <= tol {
                return Ok(QuadResult { value: est * scale, error: (err + c1) * scale });
            }
        }
        hi = lo;
    }
    Err((
        QuadResult { value: partial * scale, error: err * scale },
        "tail extrapolation did not settle".into(),
    ))
}

/// `∫_{t0}^∞ cos(phase + freq·t) t^{-1-2s} dt · amp`, in closed form through the
/// generalized exponential integral `E_ν` with `ν = 1 + 2s`.
pub fn cosine_power_tail(phase: f64, freq: f64, s: f64, t0: f64, amp: f64) -> f64 {
    use num_complex::Complex64;
    let nu = 1.0 + 2.0 * s;
    if freq == 0.0 {
        return amp * phase.cos() * t0.powf(-2.0 * s) / (2.0 * s);
    }
    // cos(phase + freq t) = cos(-phase + |freq| t) when freq < 0.
    let (ph, w) = if freq > 0.0 { (phase, freq) } else { (-phase, -freq) };
    // ∫_{t0}^∞ e^{iwt} t^{-ν} dt = t0^{1-ν} E_ν(-i w t0).
    let z = Complex64::new(0.0, -w * t0);
    let e = expint_complex(nu, z) * t0.powf(1.0 - nu);
    let val = Complex64::from_polar(1.0, ph) * e;
    amp * val.re
}

/// Generalized exponential integral `E_ν(z) = ∫_1^∞ e^{-zt} t^{-ν} dt` for
/// `Re z >= 0`, `z != 0`.
pub(crate) fn expint_complex(nu: f64, z: num_complex::Complex64) -> num_complex::Complex64 {
    use num_complex::Complex64;
    if z.norm() > 1.0 {
        // Modified Lentz evaluation of the continued fraction
        // E_ν(z) = e^{-z} / (z + ν / (1 + 1 / (z + (ν+1) / (1 + 2 / (z + ...))))).
        let tiny = Complex64::new(1e-300, 0.0);
        let mut b = z + nu;
        let mut c = Complex64::new(1.0 / 1e-300, 0.0);
        let mut d = Complex64::new(1.0, 0.0) / b;
        let mut h = d;
        for i in 1..10_000 {
            let fi = i as f64;
            let an = -fi * (nu - 1.0 + fi);
            b += 2.0;
            d = an * d + b;
            if d.norm() < 1e-300 {
                d = tiny;
            }
            c = b + an / c;
            if c.norm() < 1e-300 {
                c = tiny;
            }
            d = Complex64::new(1.0, 0.0) / d;
            let delta = c * d;
            h *= delta;
            if (delta - 1.0).norm() < 1e-16 {
                break;
            }
        }
        h * (-z).exp()
    } else {
        // E_ν(z) = z^{ν-1} Γ(1-ν) - Σ_k (-z)^k / (k! (1 - ν + k)).
        let mut series = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for k in 0..200 {
            let add = term / (1.0 - nu + k as f64);
            series += add;
            if add.norm() < 1e-18 * series.norm() {
                break;
            }
            term *= -z / (k as f64 + 1.0);
        }
        z.powf(nu - 1.0) * gamma(1.0 - nu) - series
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_orders() {
        for s in [0.5, 1.0, 0.3, 1.2, f64::NAN] {
            assert!(frac_constant_1d(s).is_err(), "s = {s}");
        }
        assert!(frac_constant_nd(0, 0.7).is_err());
    }

    #[test]
    fn nd_constant_matches_1d_bitwise() {
        for k in 1..100 {
            let s = 0.5 + k as f64 / 200.0;
            assert_eq!(frac_constant_nd(1, s).unwrap().to_bits(), frac_constant_1d(s).unwrap().to_bits());
        }
    }

    #[test]
    fn mass_is_additive() {
        let s = 0.65;
        let ab = mu_mass(s, 0.3, 1.7).unwrap();
        let bc = mu_mass(s, 1.7, 9.0).unwrap();
        let ac = mu_mass(s, 0.3, 9.0).unwrap();
        assert!((ab + bc - ac).abs() <= 1e-12 * ac);
    }

    #[test]
    fn mass_errors() {
        assert!(matches!(mu_mass(0.7, 0.0, 1.0), Err(Error::Divergent(_))));
        assert!(matches!(mu_mass(0.7, 2.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn moment_errors_and_empty_interval() {
        assert!(matches!(mu_moment(0.7, 2, 0.1, f64::INFINITY), Err(Error::Divergent(_))));
        assert!(matches!(mu_moment(0.7, 1, 0.0, 1.0), Err(Error::Divergent(_))));
        assert!(mu_moment(0.7, 3, 0.1, 1.0).is_err());
        assert_eq!(mu_moment(0.7, 1, 0.4, 0.4).unwrap(), 0.0);
        let c = frac_constant_1d(0.7).unwrap();
        let m = mu_moment(0.7, 2, 0.0, 0.5).unwrap();
        assert!((m - c * 0.5f64.powf(0.6) / 0.6).abs() < 1e-15);
    }

    #[test]
    fn quad_spec_validation() {
        assert!(QuadSpec::default().validate().is_ok());
        assert!(QuadSpec { nodes_per_panel: 3, ..QuadSpec::default() }.validate().is_err());
        assert!(QuadSpec { rel_tol: 0.0, ..QuadSpec::default() }.validate().is_err());
        assert!(QuadSpec { panels_per_decade: 1, ..QuadSpec::default() }.validate().is_err());
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        let spec = QuadSpec { max_panels: 3, ..QuadSpec::default() };
        let r = quad_mu_line(&|t: f64| (40.0 * t).cos() - 1.0, 0.7, 0.1, &spec);
        match r {
            Err(Error::Convergence { estimate, .. }) => assert!(estimate.is_finite()),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn expint_branches_agree_near_switch() {
        use num_complex::Complex64;
        let nu = 2.3;
        let z_in = Complex64::new(0.0, -0.999);
        let z_out = Complex64::new(0.0, -1.001);
        let a = expint_complex(nu, z_in);
        let b = expint_complex(nu, z_out);
        assert!((a - b).norm() < 5e-3, "{a} vs {b}");
    }
}
