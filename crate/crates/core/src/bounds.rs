//! Closed-form error bounds for the expansions of the averages around `φ(x)`.
//!
//! Every evaluator checks its parameter regime and returns
//! [`Error::OutOfRegime`] instead of clamping.

use serde::{Deserialize, Serialize};

use crate::corelap::GRADIENT_ZERO_TOL;
use crate::error::{Error, Result};
use crate::fracmeasure::{check_order, small_constant};
use crate::testfuncs::{spectral_norm, Modulus, TestFunction};
use crate::vecops::norm;

/// Tolerance of the `κ_ε` bisection.
pub const KAPPA_TOL: f64 = 1e-10;
const KAPPA_SCAN: usize = 2048;

/// Everything the bound formulas read about `φ` near `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub s: f64,
    pub eps: f64,
    pub eta: f64,
    pub c_x: f64,
    pub p_norm: f64,
    pub sup_norm: f64,
    pub modulus: Modulus,
    pub lipschitz: Option<f64>,
    /// `([φ]_α, α)`.
    pub holder: Option<(f64, f64)>,
    pub hess_norm: f64,
    pub hess_osc: f64,
}

/// Per-term values of one bound, for report tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundBreakdown {
    pub name: String,
    pub terms: Vec<(String, f64)>,
    pub total: f64,
}

impl BoundBreakdown {
    fn new(name: &str, terms: Vec<(&str, f64)>) -> Self {
        let total = terms.iter().map(|t| t.1).sum();
        Self {
            name: name.into(),
            terms: terms.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            total,
        }
    }
}

fn out_of_regime<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::OutOfRegime(msg.into()))
}

impl BoundInputs {
    /// Reads `η_x`, `C_x`, `p_x`, `∇²φ(x)` and the Hessian oscillation over
    /// `B_ε(x)` from a catalog entry.
    pub fn from_entry(phi: &TestFunction, x: &[f64], s: f64, eps: f64) -> Result<Self> {
        check_order(s)?;
        phi.check_point(x)?;
        let (p, h) = phi
            .derivatives(x)
            .ok_or_else(|| Error::Precondition(format!("{} is not twice differentiable at x", phi.name)))?;
        let (lipschitz, holder) = match &phi.modulus {
            Modulus::Lipschitz(l) => (Some(*l), None),
            Modulus::Holder { coef, alpha } => (phi.lipschitz, Some((*coef, *alpha))),
            Modulus::Zero => (Some(0.0), None),
            _ => (phi.lipschitz, None),
        };
        Ok(Self {
            s,
            eps,
            eta: phi.eta(x),
            c_x: phi.c_bound(x),
            p_norm: norm(&p),
            sup_norm: phi.sup_norm,
            modulus: phi.modulus.clone(),
            lipschitz,
            holder,
            hess_norm: spectral_norm(&h),
            hess_osc: phi.hessian_oscillation(x, eps)?,
        })
    }

    /// Same inputs at another radius, keeping the sampled oscillation.
    pub fn with_eps(&self, eps: f64) -> Self {
        Self { eps, ..self.clone() }
    }

    /// `ω_φ(a)`, capped at `2‖φ‖_∞`.
    pub fn omega(&self, a: f64) -> f64 {
        if a <= 0.0 {
            0.0
        } else {
            self.modulus.eval(a).min(2.0 * self.sup_norm)
        }
    }

    fn gradient_vanishes(&self) -> bool {
        self.p_norm <= GRADIENT_ZERO_TOL
    }

    fn check_common(&self) -> Result<()> {
        check_order(self.s)?;
        if !(self.eps > 0.0) {
            return out_of_regime(format!("eps = {} must be positive", self.eps));
        }
        if !(self.eps < self.eta) {
            return out_of_regime(format!("eps = {} must be below eta = {}", self.eps, self.eta));
        }
        Ok(())
    }

    fn check_gradient(&self) -> Result<()> {
        if self.gradient_vanishes() {
            return Err(Error::Precondition(format!(
                "|p_x| = {:e} vanishes; A_eps is defined only for a nonzero gradient",
                self.p_norm
            )));
        }
        Ok(())
    }

    fn denom(&self) -> f64 {
        let e = 1.0 - 2.0 * self.s;
        self.eps.powf(e) - self.eta.powf(e)
    }

    fn lip(&self) -> Result<f64> {
        self.lipschitz
            .ok_or_else(|| Error::Precondition("a Lipschitz constant is required".into()))
    }
}

/// Coefficient `K` in the defining inequality `a² ≤ K ω_φ(a)` of `κ_ε`.
fn kappa_coefficient(b: &BoundInputs) -> f64 {
    let s = b.s;
    let num = (2.0 * s - 1.0) / (2.0 * s) * b.eta.powf(-2.0 * s) + b.eta.powf(1.0 - 2.0 * s);
    8.0 / b.p_norm * num / b.denom()
}

/// Whether `a` satisfies the defining inequality of `κ_ε`.
pub fn kappa_feasible(b: &BoundInputs, a: f64) -> bool {
    a * a <= kappa_coefficient(b) * b.omega(a)
}

/// `κ_ε`: the largest `a ∈ [0, 2]` with `a² ≤ K ω_φ(a)`, from a uniform scan
/// refined by bisection.
pub fn kappa_eps(b: &BoundInputs) -> Result<f64> {
    b.check_common()?;
    b.check_gradient()?;
    let step = 2.0 / KAPPA_SCAN as f64;
    let mut last = 0usize;
    for k in (1..=KAPPA_SCAN).rev() {
        if kappa_feasible(b, k as f64 * step) {
            last = k;
            break;
        }
    }
    if last == KAPPA_SCAN {
        return Ok(2.0);
    }
    let (mut lo, mut hi) = (last as f64 * step, (last + 1) as f64 * step);
    if last == 0 {
        // the feasible set may be {0}: bisect towards 0 only while feasible points exist
        let mut probe = hi;
        while probe > KAPPA_TOL && !kappa_feasible(b, probe) {
            probe *= 0.5;
        }
        if probe <= KAPPA_TOL {
            return Ok(0.0);
        }
        lo = probe;
        hi = (2.0 * probe).min(step);
    }
    while hi - lo > KAPPA_TOL {
        let mid = 0.5 * (lo + hi);
        if kappa_feasible(b, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// First quotient inside `A_ε`.
pub fn a_eps_quotient(b: &BoundInputs) -> Result<f64> {
    b.check_common()?;
    b.check_gradient()?;
    let s = b.s;
    let num = b.eta.powf(2.0 - 2.0 * s) - b.eps.powf(2.0 - 2.0 * s);
    Ok(16.0 * b.c_x / b.p_norm * (2.0 * s - 1.0) / (1.0 - s) * num / b.denom())
}

/// `A_ε = max{quotient, κ_ε}`.
pub fn a_eps(b: &BoundInputs) -> Result<f64> {
    Ok(a_eps_quotient(b)?.max(kappa_eps(b)?))
}

/// Right-hand side for `|𝒜_ε^o φ(x) − φ(x) − ε^{2s} ℒ_s[φ](x) / (c_s(1−s))|`.
pub fn thm1_breakdown(b: &BoundInputs) -> Result<BoundBreakdown> {
    b.check_common()?;
    let (s, e, eta, c) = (b.s, b.eps, b.eta, b.c_x);
    let local = s / (1.0 - s) * c * e * e;
    if b.gradient_vanishes() {
        return Ok(BoundBreakdown::new("thm1", vec![("local", local), ("direction", 0.0), ("modulus", 0.0)]));
    }
    let a = a_eps(b)?;
    let w = e.powf(2.0 * s);
    let dir = w * 4.0 * s * c * (eta.powf(2.0 - 2.0 * s) - e.powf(2.0 - 2.0 * s)) / (1.0 - s) * a;
    let modt = w * (eta.powf(-2.0 * s) + 2.0 * s / (2.0 * s - 1.0) * eta.powf(1.0 - 2.0 * s)) * b.omega(a);
    Ok(BoundBreakdown::new("thm1", vec![("local", local), ("direction", dir), ("modulus", modt)]))
}

pub fn thm1_bound(b: &BoundInputs) -> Result<f64> {
    Ok(thm1_breakdown(b)?.total)
}

/// Right-hand side for `|𝒜_ε φ(x) − φ(x) − ε^{2s} ℒ_s[φ](x) / c_s|`.
pub fn thm2_breakdown(b: &BoundInputs) -> Result<BoundBreakdown> {
    b.check_common()?;
    b.check_gradient()?;
    if b.eps * b.hess_norm > b.p_norm {
        return out_of_regime(format!(
            "eps |D²φ(x)| = {:e} exceeds |p_x| = {:e}",
            b.eps * b.hess_norm,
            b.p_norm
        ));
    }
    let (s, e, eta, c) = (b.s, b.eps, b.eta, b.c_x);
    let a = a_eps(b)?;
    let w = 2.0 * e.powf(2.0 * s);
    let dir = w * 2.0 * s * c * (eta.powf(2.0 - 2.0 * s) - e.powf(2.0 - 2.0 * s)) * a;
    let modt = w * (0.5 * eta.powf(-2.0 * s) + s * eta.powf(1.0 - 2.0 * s) / (2.0 * s - 1.0)) * (1.0 - s) * b.omega(a);
    let curv = 2.0 * s * e.powi(3) * b.hess_norm * b.hess_norm / b.p_norm;
    let osc = s * e * e * b.hess_osc;
    Ok(BoundBreakdown::new(
        "thm2",
        vec![("direction", dir), ("modulus", modt), ("curvature", curv), ("oscillation", osc)],
    ))
}

pub fn thm2_bound(b: &BoundInputs) -> Result<f64> {
    Ok(thm2_breakdown(b)?.total)
}

/// The `s → 1` limit of [`thm2_bound`].
pub fn thm2_limit(b: &BoundInputs) -> f64 {
    let e = b.eps;
    2.0 * e.powi(3) * b.hess_norm * b.hess_norm / b.p_norm + e * e * b.hess_osc
}

/// Right-hand side for `|ℒ_s^ε[φ](x) − ℒ_s[φ](x)|` when `p_x ≠ 0`.
pub fn cor32_breakdown(b: &BoundInputs) -> Result<BoundBreakdown> {
    b.check_common()?;
    b.check_gradient()?;
    let (s, e, eta, c) = (b.s, b.eps, b.eta, b.c_x);
    let cs = small_constant(s)?;
    let a = a_eps(b)?;
    let dir = 4.0 * cs * s * c * (eta.powf(2.0 - 2.0 * s) - e.powf(2.0 - 2.0 * s)) * a;
    let modt = cs * (1.0 - s) * (eta.powf(-2.0 * s) + 2.0 * s / (2.0 * s - 1.0) * eta.powf(1.0 - 2.0 * s)) * b.omega(a);
    let inner = cs * s * c * e.powf(2.0 - 2.0 * s);
    Ok(BoundBreakdown::new("cor32", vec![("direction", dir), ("modulus", modt), ("inner", inner)]))
}

pub fn cor32_bound(b: &BoundInputs) -> Result<f64> {
    Ok(cor32_breakdown(b)?.total)
}

/// Right-hand side for `|ℒ_s^ε[φ](x) − ℒ_s[φ](x)|` when `p_x = 0`.
pub fn due5_bound(b: &BoundInputs) -> Result<f64> {
    b.check_common()?;
    Ok(small_constant(b.s)? * b.s * b.c_x * b.eps.powf(2.0 - 2.0 * b.s))
}

/// [`cor32_bound`] or [`due5_bound`] according to the gradient.
pub fn truncation_bound(b: &BoundInputs) -> Result<f64> {
    if b.gradient_vanishes() {
        due5_bound(b)
    } else {
        cor32_bound(b)
    }
}

/// Bound on `|sup_{B_ε} φ + inf_{B_ε} φ − 2φ(x) − ε² Δ_∞ φ(x)|`.
pub fn otto_bound(b: &BoundInputs) -> Result<f64> {
    b.check_common()?;
    b.check_gradient()?;
    let e = b.eps;
    Ok(4.0 * e.powi(3) * b.hess_norm * b.hess_norm / b.p_norm + e * e * b.hess_osc)
}

/// Bound comparing `c_s s ε^{-2s} ½(sup + inf − 2φ(x))` with the inner part
/// `∫_0^ε L dμ_s` of the operator along the gradient.
pub fn prop41_bound(b: &BoundInputs) -> Result<f64> {
    b.check_common()?;
    b.check_gradient()?;
    if b.eps * b.hess_norm > b.p_norm {
        return out_of_regime("eps |D²φ(x)| exceeds |p_x|");
    }
    let (s, e) = (b.s, b.eps);
    let cs = small_constant(s)?;
    Ok(cs * s * (2.0 * e.powf(3.0 - 2.0 * s) * b.hess_norm * b.hess_norm / b.p_norm + e.powf(2.0 - 2.0 * s) * b.hess_osc))
}

/// Bound on the sup over directions of `|prism average − line average|`.
pub fn lemma51_breakdown(b: &BoundInputs, r: f64, alpha: f64) -> Result<BoundBreakdown> {
    b.check_common()?;
    if !(r > b.eta.max(1.0)) {
        return out_of_regime(format!("R = {r} must exceed max(eta, 1) = {}", b.eta.max(1.0)));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return out_of_regime(format!("alpha = {alpha} must lie in (0, 1/2)"));
    }
    let far = 2.0 * (b.eps / r).powf(2.0 * b.s) * b.sup_norm;
    let near = (2.0 * (b.p_norm + 2.0 * b.c_x * b.eta) * b.eta * alpha).max(3.0 * r * b.omega(alpha));
    Ok(BoundBreakdown::new("lemma51", vec![("far", far), ("aperture", near)]))
}

pub fn lemma51_bound(b: &BoundInputs, r: f64, alpha: f64) -> Result<f64> {
    Ok(lemma51_breakdown(b, r, alpha)?.total)
}

/// `(R, α) = (ε^{1/(2s)−1}, ε^{4s−1/(2s)})`.
pub fn cor52_schedule(eps: f64, s: f64) -> Result<(f64, f64)> {
    check_order(s)?;
    if !(eps > 0.0) {
        return out_of_regime(format!("eps = {eps} must be positive"));
    }
    let r = eps.powf(1.0 / (2.0 * s) - 1.0);
    let alpha = eps.powf(4.0 * s - 1.0 / (2.0 * s));
    if !(r > 1.0) {
        return out_of_regime(format!("schedule gives R = {r}, need R > 1"));
    }
    if !(alpha < 0.5) {
        return out_of_regime(format!("schedule gives alpha = {alpha}, need alpha < 1/2"));
    }
    Ok((r, alpha))
}

/// Right-hand side for `|𝒜̄_ε^o φ(x) − φ(x) − ε^{2s} ℒ_s[φ](x) / (c_s(1−s))|`
/// with the prism parameters of [`cor52_schedule`]; needs a Lipschitz `φ`.
pub fn cor52_breakdown(b: &BoundInputs) -> Result<BoundBreakdown> {
    b.check_common()?;
    if b.eta > 1.0 {
        return out_of_regime(format!("eta = {} must be at most 1", b.eta));
    }
    let (r, _) = cor52_schedule(b.eps, b.s)?;
    if !(r > b.eta) {
        return out_of_regime(format!("schedule gives R = {r} below eta = {}", b.eta));
    }
    let lip = b.lip()?;
    let (s, e, eta, c) = (b.s, b.eps, b.eta, b.c_x);
    let lead = e.powf(4.0 * s - 1.0);
    let prism = lead * (2.0 * b.sup_norm + 3.0 * lip);
    let local = s / (1.0 - s) * 2.0 * c * e * e;
    let dir = if b.gradient_vanishes() {
        0.0
    } else {
        let g = eta.powf(-2.0 * s) + 2.0 * s / (2.0 * s - 1.0) * eta.powf(1.0 - 2.0 * s);
        let m = (2.0 * c / (1.0 - s)).max((eta.powf(-2.0 * s) + eta.powf(1.0 - 2.0 * s)) * lip / (2.0 * s - 1.0));
        32.0 / b.p_norm * lead * (8.0 * s / (1.0 - s) + g * lip) * m
    };
    Ok(BoundBreakdown::new("cor52", vec![("prism", prism), ("local", local), ("direction", dir)]))
}

pub fn cor52_bound(b: &BoundInputs) -> Result<f64> {
    Ok(cor52_breakdown(b)?.total)
}

fn eta_factor(b: &BoundInputs) -> f64 {
    (b.eta.powf(-2.0 * b.s) + b.eta.powf(1.0 - 2.0 * b.s)) / (2.0 * b.s - 1.0)
}

/// Simplified `κ_ε` bound for bounded `φ`, valid for `ε < η_x/2`.
pub fn kappa_order_bounded(b: &BoundInputs) -> Result<f64> {
    b.check_common()?;
    b.check_gradient()?;
    if !(b.eps < 0.5 * b.eta) {
        return out_of_regime("needs eps < eta/2");
    }
    Ok(8.0 * (b.sup_norm / b.p_norm * eta_factor(b)).sqrt() * b.eps.powf(b.s - 0.5))
}

/// Simplified `κ_ε` bound for `α`-Hölder `φ`.
pub fn kappa_order_holder(b: &BoundInputs) -> Result<f64> {
    b.check_common()?;
    b.check_gradient()?;
    let (coef, alpha) = b
        .holder
        .ok_or_else(|| Error::Precondition("a Hölder seminorm is required".into()))?;
    let q = 1.0 / (2.0 - alpha);
    Ok((32.0 * coef / b.p_norm * eta_factor(b)).powf(q) * b.eps.powf((2.0 * b.s - 1.0) * q))
}

/// Simplified `κ_ε` bound for Lipschitz `φ`.
pub fn kappa_order_lipschitz(b: &BoundInputs) -> Result<f64> {
    b.check_common()?;
    b.check_gradient()?;
    Ok(32.0 * b.lip()? / b.p_norm * eta_factor(b) * b.eps.powf(2.0 * b.s - 1.0))
}

/// Simplified `A_ε` bound for Lipschitz `φ`.
pub fn a_order_lipschitz(b: &BoundInputs) -> Result<f64> {
    b.check_common()?;
    b.check_gradient()?;
    let s = b.s;
    let m = (2.0 * b.c_x * b.eta.powf(2.0 - 2.0 * s) / (1.0 - s)).max(b.lip()? * eta_factor(b));
    Ok(32.0 / b.p_norm * m * b.eps.powf(2.0 * s - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lip_inputs(eps: f64) -> BoundInputs {
        BoundInputs {
            s: 0.75,
            eps,
            eta: 0.5,
            c_x: 0.5,
            p_norm: 0.8,
            sup_norm: 1.0,
            modulus: Modulus::Lipschitz(1.0),
            lipschitz: Some(1.0),
            holder: None,
            hess_norm: 1.0,
            hess_osc: 0.1,
        }
    }

    #[test]
    fn kappa_is_zero_for_vanishing_modulus() {
        let b = BoundInputs { modulus: Modulus::Zero, ..lip_inputs(0.01) };
        assert_eq!(kappa_eps(&b).unwrap(), 0.0);
    }

    #[test]
    fn kappa_bisection_brackets_the_boundary() {
        for eps in [0.3, 0.1, 0.01, 1e-4] {
            let b = lip_inputs(eps);
            let k = kappa_eps(&b).unwrap();
            if k < 2.0 {
                assert!(kappa_feasible(&b, k - KAPPA_TOL), "eps {eps}");
                assert!(!kappa_feasible(&b, k + KAPPA_TOL), "eps {eps}");
            }
        }
        let b = BoundInputs { modulus: Modulus::Holder { coef: 1.0, alpha: 0.5 }, holder: Some((1.0, 0.5)), ..lip_inputs(0.01) };
        let k = kappa_eps(&b).unwrap();
        assert!(kappa_feasible(&b, k - KAPPA_TOL) && !kappa_feasible(&b, k + KAPPA_TOL));
    }

    #[test]
    fn lipschitz_orders_dominate() {
        for eps in [0.2, 0.05, 0.01, 1e-3] {
            let b = lip_inputs(eps);
            assert!(kappa_eps(&b).unwrap() <= kappa_order_lipschitz(&b).unwrap() * (1.0 + 1e-9));
            assert!(a_eps(&b).unwrap() <= a_order_lipschitz(&b).unwrap() * (1.0 + 1e-9));
            assert!(kappa_eps(&b).unwrap() <= kappa_order_bounded(&b).unwrap() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn holder_order_dominates() {
        for alpha in [0.3, 0.5, 0.8] {
            for eps in [0.1, 0.01, 1e-3] {
                let b = BoundInputs {
                    modulus: Modulus::Holder { coef: 1.3, alpha },
                    holder: Some((1.3, alpha)),
                    lipschitz: None,
                    ..lip_inputs(eps)
                };
                assert!(kappa_eps(&b).unwrap() <= kappa_order_holder(&b).unwrap() * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn quotient_limit_at_eta() {
        // numerator and denominator both vanish; the ratio tends to 32 C_x η / |p|
        let b = lip_inputs(0.5 - 1e-7);
        let want = 32.0 * b.c_x * b.eta / b.p_norm;
        assert!((a_eps_quotient(&b).unwrap() - want).abs() < 1e-5 * want);
    }

    #[test]
    fn zero_gradient_reduces_to_local_term() {
        let b = BoundInputs { p_norm: 0.0, ..lip_inputs(0.1) };
        let want = 0.75 / 0.25 * 0.5 * 0.01;
        assert!((thm1_bound(&b).unwrap() - want).abs() < 1e-15);
        assert!(matches!(a_eps(&b), Err(Error::Precondition(_))));
    }

    #[test]
    fn regime_errors() {
        let b = lip_inputs(0.6);
        assert!(matches!(thm1_bound(&b), Err(Error::OutOfRegime(_))));
        let b = BoundInputs { hess_norm: 100.0, ..lip_inputs(0.1) };
        assert!(matches!(thm2_bound(&b), Err(Error::OutOfRegime(_))));
        let b = lip_inputs(0.1);
        assert!(matches!(lemma51_bound(&b, 0.9, 0.1), Err(Error::OutOfRegime(_))));
        assert!(matches!(lemma51_bound(&b, 2.0, 0.5), Err(Error::OutOfRegime(_))));
        assert!(lemma51_bound(&b, 2.0, 0.1).is_ok());
    }

    #[test]
    fn schedule_exponents() {
        let (r, a) = cor52_schedule(1e-3, 0.75).unwrap();
        assert!((r - 10.0).abs() < 1e-9);
        assert!((a - 1e-3f64.powf(7.0 / 3.0)).abs() < 1e-20);
        assert!(cor52_schedule(0.9, 0.55).is_err());
    }

    #[test]
    fn thm2_tends_to_local_limit() {
        let mut b = lip_inputs(0.05);
        b.s = 0.999;
        let lim = thm2_limit(&b);
        let full = thm2_bound(&b).unwrap();
        assert!(full >= 0.0 && (full - lim).abs() < 0.05 * lim + 1e-3);
    }

    #[test]
    fn breakdown_serializes() {
        let bd = thm1_breakdown(&lip_inputs(0.1)).unwrap();
        let js = serde_json::to_string(&bd).unwrap();
        let back: BoundBreakdown = serde_json::from_str(&js).unwrap();
        assert_eq!(bd, back);
        assert_eq!(bd.terms.len(), 3);
    }
}
