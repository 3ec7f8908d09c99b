//! The operator core: second differences, line averages, `ℒ_s^ε`, `ℒ_s`,
//! the averages `𝒜_ε^o` and `𝒜_ε`, and the classical local references.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fracmeasure::{check_order, frac_constant_1d, mu_mass, quad_mu_line_with_tail, QuadResult, QuadSpec, TailFn};
use crate::gauss::{gauss_legendre, power_weight_unit};
use crate::sphereopt::{ball_extrema, infsup_pair, sphere_extrema, sphere_points, supinf_pair, Certificate, Extended, SphereOpts};
use crate::testfuncs::TestFunction;
use crate::vecops::{axpy, dot, norm, scale};

/// Gradients with norm at or below this are treated as zero.
pub const GRADIENT_ZERO_TOL: f64 = 1e-10;

/// Quadrature and optimizer settings shared by all operators.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOpts {
    pub quad: QuadSpec,
    pub sphere: SphereOpts,
    /// Also evaluate the inf–sup on the sup–inf branch.
    pub report_infsup: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    GradientAligned,
    SupInf,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Quadrature error estimate, in the units of the value.
    pub quad_error: f64,
    pub certificate: Option<Certificate>,
    /// Sup and inf directions, where an optimization took place.
    pub argsup: Option<Vec<f64>>,
    pub arginf: Option<Vec<f64>>,
    /// Divergent coefficient left at the sup–inf optimum (zero in exact arithmetic).
    pub residual_divergence: Option<f64>,
    pub infsup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorValue {
    pub value: f64,
    pub branch: Branch,
    pub diagnostics: Diagnostics,
}

impl OperatorValue {
    /// `Δ_∞^s φ(x) = ℒ_s[φ](x) / C_s`.
    pub fn normalized(&self, s: f64) -> Result<f64> {
        Ok(self.value / frac_constant_1d(s)?)
    }
}

/// `L_φ(x, y, ỹ) = φ(x+y) + φ(x−ỹ) − 2φ(x)`.
pub fn second_difference(phi: &TestFunction, x: &[f64], y: &[f64], yt: &[f64]) -> f64 {
    phi.eval(&axpy(x, 1.0, y)) + phi.eval(&axpy(x, -1.0, yt)) - 2.0 * phi.eval(x)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        domain(format!("eps must be positive and finite, got {eps}"))
    }
}

fn check_direction(y: &[f64], x: &[f64]) -> Result<()> {
    if y.len() != x.len() || (norm(y) - 1.0).abs() > 1e-12 {
        return domain("direction must be a unit vector of the point's dimension");
    }
    Ok(())
}

/// `∫_ε^∞ (φ(x+ty) − φ(x)) dμ_s(t)`.
pub fn centered_line_integral(phi: &TestFunction, x: &[f64], y: &[f64], s: f64, eps: f64, quad: &QuadSpec) -> Result<QuadResult> {
    let fx = phi.eval(x);
    let f = |t: f64| phi.eval(&axpy(x, t, y)) - fx;
    let tail = |t0: f64| phi.line_tail(x, y, s, t0).expect("tail") - fx * t0.powf(-2.0 * s) / (2.0 * s);
    let tail_ref: Option<TailFn<'_>> = if phi.has_line_tail() { Some(&tail) } else { None };
    quad_mu_line_with_tail(&f, tail_ref, s, eps, &with_noise(quad, phi.sup_norm))
}

/// `⨏_ε^∞ φ(x+ty) dμ_s(t)`.
pub fn line_average(phi: &TestFunction, x: &[f64], y: &[f64], s: f64, eps: f64, quad: &QuadSpec) -> Result<f64> {
    check_eps(eps)?;
    phi.check_point(x)?;
    check_direction(y, x)?;
    let r = centered_line_integral(phi, x, y, s, eps, quad)?;
    Ok(phi.eval(x) + r.value / mu_mass(s, eps, f64::INFINITY)?)
}

/// Shared pieces of `ℒ_s^ε` and `𝒜_ε^o`: the extremal centered line integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsParts {
    pub s: f64,
    pub eps: f64,
    pub phi_x: f64,
    pub sup: f64,
    pub inf: f64,
    pub argsup: Vec<f64>,
    pub arginf: Vec<f64>,
    /// `μ_s(ε, ∞)`.
    pub mass: f64,
    pub quad_error: f64,
    pub certificate: Certificate,
}

impl EpsParts {
    /// `ℒ_s^ε[φ](x)`.
    pub fn lap(&self) -> f64 {
        self.sup + self.inf
    }

    /// `𝒜_ε^o φ(x)`.
    pub fn average(&self) -> f64 {
        self.phi_x + 0.5 * (self.sup / self.mass + self.inf / self.mass)
    }
}

/// Extremal line integrals over `(ε, ∞)`, computed once and shared.
pub fn eps_parts(phi: &TestFunction, x: &[f64], s: f64, eps: f64, opts: &EvalOpts) -> Result<EpsParts> {
    check_order(s)?;
    check_eps(eps)?;
    phi.check_point(x)?;
    let obj = |y: &[f64]| centered_line_integral(phi, x, y, s, eps, &opts.quad).map(|r| r.value);
    let (hi, lo) = sphere_extrema(&obj, x.len(), &opts.sphere)?;
    let err_hi = centered_line_integral(phi, x, &hi.argopt, s, eps, &opts.quad)?.error;
    let err_lo = centered_line_integral(phi, x, &lo.argopt, s, eps, &opts.quad)?.error;
    Ok(EpsParts {
        s,
        eps,
        phi_x: phi.eval(x),
        sup: hi.value,
        inf: lo.value,
        argsup: hi.argopt,
        arginf: lo.argopt,
        mass: mu_mass(s, eps, f64::INFINITY)?,
        quad_error: err_hi + err_lo,
        certificate: Certificate {
            seeds: hi.certificate.seeds,
            refinement_iters: hi.certificate.refinement_iters + lo.certificate.refinement_iters,
            achieved_tol: hi.certificate.achieved_tol.max(lo.certificate.achieved_tol),
        },
    })
}

/// `ℒ_s^ε[φ](x)` in its separated form.
pub fn lap_frac_eps(phi: &TestFunction, x: &[f64], s: f64, eps: f64, opts: &EvalOpts) -> Result<OperatorValue> {
    let p = eps_parts(phi, x, s, eps, opts)?;
    Ok(OperatorValue {
        value: p.lap(),
        branch: Branch::SupInf,
        diagnostics: Diagnostics {
            quad_error: p.quad_error,
            certificate: Some(p.certificate),
            argsup: Some(p.argsup.clone()),
            arginf: Some(p.arginf.clone()),
            ..Default::default()
        },
    })
}

/// `𝒜_ε^o φ(x)`.
pub fn average_o(phi: &TestFunction, x: &[f64], s: f64, eps: f64, opts: &EvalOpts) -> Result<f64> {
    Ok(eps_parts(phi, x, s, eps, opts)?.average())
}

fn gradient_at(phi: &TestFunction, x: &[f64]) -> Result<Vec<f64>> {
    phi.gradient(x)
        .ok_or_else(|| Error::Precondition(format!("{} has no gradient at {:?}", phi.name, x)))
}

/// `ℒ_s[φ](x)`: the gradient-aligned integral when `∇φ(x) ≠ 0`, otherwise the
/// sup–inf over pairs of directions.
pub fn lap_frac(phi: &TestFunction, x: &[f64], s: f64, opts: &EvalOpts) -> Result<OperatorValue> {
    check_order(s)?;
    phi.check_point(x)?;
    let p = gradient_at(phi, x)?;
    if norm(&p) > GRADIENT_ZERO_TOL {
        lap_frac_aligned(phi, x, s, &p, &opts.quad)
    } else {
        lap_frac_supinf(phi, x, s, opts)
    }
}

fn lap_frac_aligned(phi: &TestFunction, x: &[f64], s: f64, p: &[f64], quad: &QuadSpec) -> Result<OperatorValue> {
    let ph = scale(p, 1.0 / norm(p));
    let fx = phi.eval(x);
    let f = |t: f64| phi.eval(&axpy(x, t, &ph)) + phi.eval(&axpy(x, -t, &ph)) - 2.0 * fx;
    let mh = scale(&ph, -1.0);
    let tail = |t0: f64| {
        phi.line_tail(x, &ph, s, t0).expect("tail") + phi.line_tail(x, &mh, s, t0).expect("tail") - fx * t0.powf(-2.0 * s) / s
    };
    let tail_ref: Option<TailFn<'_>> = if phi.has_line_tail() { Some(&tail) } else { None };
    let r = quad_mu_line_with_tail(&f, tail_ref, s, 0.0, &with_noise(quad, 4.0 * phi.sup_norm))?;
    Ok(OperatorValue {
        value: r.value,
        branch: Branch::GradientAligned,
        diagnostics: Diagnostics { quad_error: r.error, argsup: Some(ph.clone()), arginf: Some(ph), ..Default::default() },
    })
}

/// `quad` with its rounding scale raised to `scale`.
fn with_noise(quad: &QuadSpec, scale: f64) -> QuadSpec {
    QuadSpec { noise_scale: quad.noise_scale.max(scale), ..*quad }
}

type Memo = Mutex<HashMap<Vec<u64>, QuadResult>>;

/// `G(v) = ∫_0^∞ [φ(x+tv) − φ(x) − t⟨p, v⟩ 1_{t<c}] dμ_s(t)` with `c` the
/// quadrature's inner cut, memoized per direction.
fn regularized_line(phi: &TestFunction, x: &[f64], p: &[f64], v: &[f64], s: f64, quad: &QuadSpec, memo: &Memo) -> Result<QuadResult> {
    let key: Vec<u64> = v.iter().map(|c| c.to_bits()).collect();
    if let Some(r) = memo.lock().expect("memo").get(&key) {
        return Ok(*r);
    }
    let fx = phi.eval(x);
    let pv = dot(p, v);
    let cut = quad.inner_cut;
    let f = |t: f64| phi.eval(&axpy(x, t, v)) - fx - if t < cut { t * pv } else { 0.0 };
    let tail = |t0: f64| phi.line_tail(x, v, s, t0).expect("tail") - fx * t0.powf(-2.0 * s) / (2.0 * s);
    let tail_ref: Option<TailFn<'_>> = if phi.has_line_tail() { Some(&tail) } else { None };
    let r = quad_mu_line_with_tail(&f, tail_ref, s, 0.0, &with_noise(quad, phi.sup_norm + cut * pv.abs()))?;
    memo.lock().expect("memo").insert(key, r);
    Ok(r)
}

/// `sup_y inf_ỹ ∫_0^∞ L_φ(x, ty, tỹ) dμ_s(t)` by nested optimization over pairs
/// of directions, whatever the gradient. Pairs with `⟨p, y − ỹ⟩ ≠ 0` have an
/// infinite integral; they are ranked by that coefficient first and by the
/// regularized remainder second.
pub fn lap_frac_supinf(phi: &TestFunction, x: &[f64], s: f64, opts: &EvalOpts) -> Result<OperatorValue> {
    check_order(s)?;
    phi.check_point(x)?;
    let p = gradient_at(phi, x)?;
    let memo: Memo = Mutex::new(HashMap::new());
    let obj2 = |y: &[f64], yt: &[f64]| -> Result<Extended> {
        let a = regularized_line(phi, x, &p, y, s, &opts.quad, &memo)?;
        let myt = scale(yt, -1.0);
        let b = regularized_line(phi, x, &p, &myt, s, &opts.quad, &memo)?;
        Ok(Extended { divergent: dot(&p, y) - dot(&p, yt), finite: a.value + b.value })
    };
    let dim = x.len();
    let (outer, inner) = supinf_pair(&obj2, dim, &opts.sphere)?;
    let a = regularized_line(phi, x, &p, &outer.argopt, s, &opts.quad, &memo)?;
    let b = regularized_line(phi, x, &p, &scale(&inner.argopt, -1.0), s, &opts.quad, &memo)?;
    let infsup = if opts.report_infsup {
        let (o, _) = infsup_pair(&obj2, dim, &opts.sphere)?;
        Some(if o.value.divergent.abs() <= 1e-9 * norm(&p).max(1.0) { o.value.finite } else { f64::NAN })
    } else {
        None
    };
    Ok(OperatorValue {
        value: outer.value.finite,
        branch: Branch::SupInf,
        diagnostics: Diagnostics {
            quad_error: a.error + b.error,
            certificate: Some(outer.certificate),
            argsup: Some(outer.argopt),
            arginf: Some(inner.argopt),
            residual_divergence: Some(outer.value.divergent),
            infsup,
        },
    })
}

/// `Δ_∞^s φ(x)`.
pub fn frac_inf_laplacian(phi: &TestFunction, x: &[f64], s: f64, opts: &EvalOpts) -> Result<f64> {
    lap_frac(phi, x, s, opts)?.normalized(s)
}

/// `½(sup_{B_ε(x)} φ + inf_{B_ε(x)} φ)`.
pub fn midpoint_local(phi: &TestFunction, x: &[f64], eps: f64, opts: &EvalOpts) -> Result<f64> {
    let b = ball_extrema(phi, x, eps, &opts.sphere)?;
    Ok(0.5 * (b.sup + b.inf))
}

/// The two ingredients of `𝒜_ε` and their combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedParts {
    pub nonlocal: EpsParts,
    pub midpoint: f64,
    pub value: f64,
}

/// `𝒜_ε φ(x) = (1−s) 𝒜_ε^o φ(x) + s · ½(sup_{B_ε} φ + inf_{B_ε} φ)`.
pub fn average_mixed_parts(phi: &TestFunction, x: &[f64], s: f64, eps: f64, opts: &EvalOpts) -> Result<MixedParts> {
    let nonlocal = eps_parts(phi, x, s, eps, opts)?;
    let midpoint = midpoint_local(phi, x, eps, opts)?;
    let value = (1.0 - s) * nonlocal.average() + s * midpoint;
    Ok(MixedParts { nonlocal, midpoint, value })
}

pub fn average_mixed(phi: &TestFunction, x: &[f64], s: f64, eps: f64, opts: &EvalOpts) -> Result<f64> {
    Ok(average_mixed_parts(phi, x, s, eps, opts)?.value)
}

/// `Δ_∞ φ(x) = ⟨∇²φ(x) p̂, p̂⟩`.
pub fn lap_inf_local(phi: &TestFunction, x: &[f64]) -> Result<f64> {
    phi.check_point(x)?;
    let (g, h) = phi
        .derivatives(x)
        .ok_or_else(|| Error::Precondition(format!("{} has no derivatives at x", phi.name)))?;
    let n = norm(&g);
    if n <= GRADIENT_ZERO_TOL {
        return Err(Error::Precondition("the local infinity-Laplacian needs a nonzero gradient".into()));
    }
    let u = scale(&g, 1.0 / n);
    let mut q = 0.0;
    for i in 0..u.len() {
        for j in 0..u.len() {
            q += h[(i, j)] * u[i] * u[j];
        }
    }
    Ok(q)
}

/// `Δφ(x)`, the trace of the Hessian.
pub fn laplacian_local(phi: &TestFunction, x: &[f64]) -> Result<f64> {
    let h = phi.hessian(x).ok_or_else(|| Error::Precondition(format!("{} has no Hessian at x", phi.name)))?;
    Ok(h.trace())
}

/// Volume average of `φ` over `B_ε(x)` by a radial Gauss rule times an
/// angular rule (equiangular in 2-D, Gauss in `cos θ` times equiangular in 3-D).
pub fn ball_mean_local(phi: &TestFunction, x: &[f64], eps: f64) -> Result<f64> {
    check_eps(eps)?;
    phi.check_point(x)?;
    let dim = x.len();
    let radial = power_weight_unit(24, (dim - 1) as f64);
    let mut angular: Vec<(Vec<f64>, f64)> = Vec::new();
    match dim {
        1 => angular.extend(sphere_points(1, 2).into_iter().map(|d| (d, 1.0))),
        2 => angular.extend(sphere_points(2, 64).into_iter().map(|d| (d, 1.0))),
        _ => {
            let gl = gauss_legendre(32);
            for (z, w) in gl.nodes.iter().zip(&gl.weights) {
                let r = (1.0 - z * z).sqrt();
                for k in 0..64 {
                    let a = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
                    angular.push((vec![r * a.cos(), r * a.sin(), *z], *w));
                }
            }
        }
    }
    let fx = phi.eval(x);
    let mut num = 0.0;
    let mut den = 0.0;
    for (rho, wr) in radial.nodes.iter().zip(&radial.weights) {
        for (d, wa) in &angular {
            num += wr * wa * (phi.eval(&axpy(x, eps * rho, d)) - fx);
            den += wr * wa;
        }
    }
    Ok(fx + num / den)
}
