//! Catalog of bounded test functions with analytic derivatives and the local
//! regularity data (`η_x`, `C_x`, modulus of continuity) the error bounds need.
//!
//! Entries are addressed by spec strings `name[:key=v1,v2;key2=...]`, e.g.
//! `cosine:xi=1,0` or `cutquad:kind=identity`.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};
use crate::fracmeasure::cosine_power_tail;
use crate::sphereopt::sphere_points;
use crate::vecops::{axpy, dist, dot, norm, scale, sub};

/// Modulus of continuity `a ↦ ω(a)`, before the `2‖φ‖` cap.
#[derive(Debug, Clone, PartialEq)]
pub enum Modulus {
    Zero,
    Lipschitz(f64),
    Holder { coef: f64, alpha: f64 },
    Sum(Box<Modulus>, f64, Box<Modulus>, f64),
    /// `a ↦ factor · inner(lambda · a)`.
    Dilated { factor: f64, lambda: f64, inner: Box<Modulus> },
}

impl Modulus {
    pub fn eval(&self, a: f64) -> f64 {
        match self {
            Modulus::Zero => 0.0,
            Modulus::Lipschitz(l) => l * a,
            Modulus::Holder { coef, alpha } => coef * a.powf(*alpha),
            Modulus::Sum(m1, w1, m2, w2) => w1.abs() * m1.eval(a) + w2.abs() * m2.eval(a),
            Modulus::Dilated { factor, lambda, inner } => factor.abs() * inner.eval(lambda * a),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Cone {
    center: Vec<f64>,
    amp: f64,
    radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Constant(f64),
    Cosine { xi: Vec<f64>, eta: f64 },
    Gaussian { center: Vec<f64>, eta: f64 },
    Bump { center: Vec<f64>, eta: f64 },
    Tent { cones: Vec<Cone> },
    Holder { center: Vec<f64>, alpha: f64 },
    CutQuad(CutQuad),
    /// `z ↦ factor · inner(lambda · z + shift)`.
    Affine { factor: f64, lambda: f64, shift: Vec<f64>, inner: Box<TestFunction> },
    /// `a · first + b · second`.
    Sum { a: f64, first: Box<TestFunction>, b: f64, second: Box<TestFunction> },
}

/// Quadratic `c0 + ⟨p, z-x0⟩ + ½(z-x0)ᵀH(z-x0)` times a radial quintic cutoff
/// that is 1 on `B_{r1}(x0)` and 0 outside `B_{r2}(x0)`.
#[derive(Debug, Clone, PartialEq)]
struct CutQuad {
    x0: Vec<f64>,
    c0: f64,
    p: Vec<f64>,
    h: DMatrix<f64>,
    r1: f64,
    r2: f64,
}

/// A bounded test function with its regularity metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub name: String,
    shape: Shape,
    /// Upper bound for `‖φ‖_∞`.
    pub sup_norm: f64,
    /// Global Lipschitz constant, when one is known.
    pub lipschitz: Option<f64>,
    pub modulus: Modulus,
    /// Designated evaluation point used by the experiments.
    pub point: Vec<f64>,
    /// Fixed dimension, or `None` when any dimension works.
    pub dim: Option<usize>,
}

fn rel(z: &[f64], c: &[f64]) -> Vec<f64> {
    if c.is_empty() {
        z.to_vec()
    } else {
        sub(z, c)
    }
}

/// Gradient and Hessian of `z ↦ f(|u|)` given `f'`, `f''` and `f'(r)/r`.
fn radial_derivatives(u: &[f64], f1: f64, f2: f64, f1_over_r: f64) -> (Vec<f64>, DMatrix<f64>) {
    let n = u.len();
    let r = norm(u);
    if r == 0.0 {
        return (vec![0.0; n], DMatrix::identity(n, n) * f2);
    }
    let uh = scale(u, 1.0 / r);
    let grad = scale(&uh, f1);
    let mut h = DMatrix::identity(n, n) * f1_over_r;
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] += (f2 - f1_over_r) * uh[i] * uh[j];
        }
    }
    (grad, h)
}

/// `exp(1 - 1/(1-r²))` and its first two radial derivatives plus `f'/r`.
fn bump_profile(r: f64) -> (f64, f64, f64, f64) {
    if r >= 1.0 {
        return (0.0, 0.0, 0.0, 0.0);
    }
    let g = 1.0 / (1.0 - r * r);
    let f = (1.0 - g).exp();
    let f1_over_r = -2.0 * g * g * f;
    let f2 = f * (-2.0 * g * g - 8.0 * r * r * g.powi(3) + 4.0 * r * r * g.powi(4));
    (f, f1_over_r * r, f2, f1_over_r)
}

/// Scanned bounds `(max |f'|, max Hessian norm)` of the bump profile.
fn bump_bounds() -> (f64, f64) {
    static B: OnceLock<(f64, f64)> = OnceLock::new();
    *B.get_or_init(|| {
        let mut lip: f64 = 0.0;
        let mut hess: f64 = 0.0;
        for k in 0..=20_000 {
            let r = k as f64 / 20_000.0;
            let (_, f1, f2, f1r) = bump_profile(r);
            lip = lip.max(f1.abs());
            hess = hess.max(f2.abs()).max(f1r.abs());
        }
        (lip * 1.01, hess * 1.01)
    })
}

/// Quintic smoothstep cutoff `χ(r)` with `χ = 1` below `r1` and `0` above `r2`.
fn cutoff(r: f64, r1: f64, r2: f64) -> (f64, f64, f64) {
    if r <= r1 {
        return (1.0, 0.0, 0.0);
    }
    if r >= r2 {
        return (0.0, 0.0, 0.0);
    }
    let w = r2 - r1;
    let u = (r - r1) / w;
    let s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
    let s1 = 30.0 * u * u * (1.0 - u) * (1.0 - u);
    let s2 = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
    (1.0 - s, -s1 / w, -s2 / (w * w))
}

pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().amax()
}

impl CutQuad {
    fn quad(&self, u: &[f64]) -> (f64, Vec<f64>) {
        let n = u.len();
        let hu: Vec<f64> = (0..n).map(|i| (0..n).map(|j| self.h[(i, j)] * u[j]).sum()).collect();
        let q = self.c0 + dot(&self.p, u) + 0.5 * dot(u, &hu);
        let grad: Vec<f64> = self.p.iter().zip(&hu).map(|(a, b)| a + b).collect();
        (q, grad)
    }

    fn eval(&self, z: &[f64]) -> f64 {
        let u = sub(z, &self.x0);
        let (chi, _, _) = cutoff(norm(&u), self.r1, self.r2);
        if chi == 0.0 {
            return 0.0;
        }
        chi * self.quad(&u).0
    }

    fn derivatives(&self, z: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let n = z.len();
        let u = sub(z, &self.x0);
        let r = norm(&u);
        let (q, gq) = self.quad(&u);
        let (chi, c1, c2) = cutoff(r, self.r1, self.r2);
        let (gchi, hchi) = if r > 0.0 {
            radial_derivatives(&u, c1, c2, c1 / r)
        } else {
            (vec![0.0; n], DMatrix::zeros(n, n))
        };
        let grad: Vec<f64> = (0..n).map(|i| chi * gq[i] + q * gchi[i]).collect();
        let mut h = &self.h * chi + hchi * q;
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] += gq[i] * gchi[j] + gchi[i] * gq[j];
            }
        }
        (grad, h)
    }

    fn sup_bound(&self) -> f64 {
        self.c0.abs() + norm(&self.p) * self.r2 + 0.5 * spectral_norm(&self.h) * self.r2 * self.r2
    }

    fn lipschitz_bound(&self) -> f64 {
        let grad_q = norm(&self.p) + spectral_norm(&self.h) * self.r2;
        grad_q + self.sup_bound() * 15.0 / (8.0 * (self.r2 - self.r1))
    }
}

impl TestFunction {
    fn new(name: &str, shape: Shape, sup_norm: f64, lipschitz: Option<f64>, modulus: Modulus, point: Vec<f64>, dim: Option<usize>) -> Self {
        TestFunction { name: name.to_string(), shape, sup_norm, lipschitz, modulus, point, dim }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(&format!("constant:value={c}"), Shape::Constant(c), c.abs(), Some(0.0), Modulus::Zero, vec![0.0, 0.0], None)
    }

    /// Plane wave `cos⟨ξ, z⟩`.
    pub fn cosine(xi: Vec<f64>, eta: f64) -> Self {
        let k = norm(&xi);
        let point = [1.1, 0.4, 0.2][..xi.len().min(3)].to_vec();
        let dim = Some(xi.len());
        let name = format!("cosine:xi={}", join(&xi));
        Self::new(&name, Shape::Cosine { xi, eta }, 1.0, Some(k), Modulus::Lipschitz(k), point, dim)
    }

    /// `exp(-|z - center|²)`; an empty center means the origin.
    pub fn gaussian(center: Vec<f64>, eta: f64) -> Self {
        let lip = 2f64.sqrt() * (-0.5f64).exp();
        let point = if center.is_empty() { vec![0.0, 0.0] } else { center.clone() };
        let dim = (!center.is_empty()).then_some(center.len());
        Self::new("gaussian", Shape::Gaussian { center, eta }, 1.0, Some(lip), Modulus::Lipschitz(lip), point, dim)
    }

    /// `exp(1 - 1/(1-|z-center|²))` on the unit ball, zero outside.
    pub fn bump(center: Vec<f64>, eta: f64) -> Self {
        let (lip, _) = bump_bounds();
        let dim = (!center.is_empty()).then_some(center.len());
        let point = match center.len() {
            0 => vec![0.3, 0.2],
            n => axpy(&center, 1.0, &[0.3, 0.2, 0.1][..n.min(3)]),
        };
        Self::new("bump", Shape::Bump { center, eta }, 1.0, Some(lip), Modulus::Lipschitz(lip), point, dim)
    }

    /// Two cones with different centers, radii and heights. Lipschitz
    /// everywhere, smooth away from the apexes and support circles.
    pub fn tent() -> Self {
        let cones = vec![
            Cone { center: vec![0.0, 0.0], amp: 1.0, radius: 2.0 },
            Cone { center: vec![1.2, 0.8], amp: 0.6, radius: 2.0 },
        ];
        let lip: f64 = cones.iter().map(|c| c.amp / c.radius).sum();
        let sup: f64 = cones.iter().map(|c| c.amp).sum();
        Self::new("tent", Shape::Tent { cones }, sup, Some(lip), Modulus::Lipschitz(lip), vec![0.5, -0.3], Some(2))
    }

    /// `min(|z - center|^α, 1)`: Hölder-α globally, smooth away from the
    /// center and the unit sphere around it.
    pub fn holder(center: Vec<f64>, alpha: f64) -> Self {
        let dim = (!center.is_empty()).then_some(center.len());
        let point = match center.len() {
            0 => vec![0.4, 0.2],
            n => axpy(&center, 1.0, &[0.4, 0.2, 0.1][..n.min(3)]),
        };
        Self::new(
            &format!("holder:alpha={alpha}"),
            Shape::Holder { center, alpha },
            1.0,
            None,
            Modulus::Holder { coef: 1.0, alpha },
            point,
            dim,
        )
    }

    fn cutquad(name: &str, c0: f64, p: Vec<f64>, h: DMatrix<f64>) -> Self {
        let x0 = vec![0.2, -0.1];
        let cq = CutQuad { x0: x0.clone(), c0, p, h, r1: 1.0, r2: 2.5 };
        let sup = cq.sup_bound();
        let lip = cq.lipschitz_bound();
        Self::new(name, Shape::CutQuad(cq), sup, Some(lip), Modulus::Lipschitz(lip), x0, Some(2))
    }

    /// Quadratic with a generic indefinite Hessian, cut off smoothly. `C^{2,1}`.
    pub fn cutquad_generic() -> Self {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -0.3]);
        Self::cutquad("cutquad", 0.3, vec![1.0, 0.4], h)
    }

    /// Quadratic with identity Hessian, cut off smoothly.
    pub fn cutquad_identity() -> Self {
        Self::cutquad("cutquad:kind=identity", 0.1, vec![0.8, -0.3], DMatrix::identity(2, 2))
    }

    /// Affine function cut off smoothly.
    pub fn cutquad_affine() -> Self {
        Self::cutquad("cutquad:kind=affine", 0.5, vec![0.6, 0.8], DMatrix::zeros(2, 2))
    }

    /// `z ↦ factor · φ(lambda · z + shift)`.
    pub fn affine_transform(&self, factor: f64, lambda: f64, shift: Vec<f64>) -> Self {
        assert!(lambda > 0.0, "dilation must be positive");
        let point = self.point.iter().zip(shift.iter().chain(std::iter::repeat(&0.0))).map(|(p, s)| (p - s) / lambda).collect();
        Self::new(
            &format!("{}|x{factor}@{lambda}", self.name),
            Shape::Affine { factor, lambda, shift, inner: Box::new(self.clone()) },
            factor.abs() * self.sup_norm,
            self.lipschitz.map(|l| factor.abs() * lambda * l),
            Modulus::Dilated { factor, lambda, inner: Box::new(self.modulus.clone()) },
            point,
            self.dim,
        )
    }

    /// `a · self + b · other`.
    pub fn combine(&self, a: f64, other: &TestFunction, b: f64) -> Self {
        let lipschitz = match (self.lipschitz, other.lipschitz) {
            (Some(l1), Some(l2)) => Some(a.abs() * l1 + b.abs() * l2),
            _ => None,
        };
        Self::new(
            &format!("{a}*{}+{b}*{}", self.name, other.name),
            Shape::Sum { a, first: Box::new(self.clone()), b, second: Box::new(other.clone()) },
            a.abs() * self.sup_norm + b.abs() * other.sup_norm,
            lipschitz,
            Modulus::Sum(Box::new(self.modulus.clone()), a, Box::new(other.modulus.clone()), b),
            self.point.clone(),
            self.dim.or(other.dim),
        )
    }

    /// Checks that a point has a dimension this entry supports.
    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.is_empty() || x.len() > 3 {
            return Err(Error::UnsupportedDimension(x.len()));
        }
        if let Some(d) = self.dim {
            if d != x.len() {
                return domain(format!("{} is defined in dimension {d}, got a point of dimension {}", self.name, x.len()));
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return domain("point has non-finite coordinates");
        }
        Ok(())
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        match &self.shape {
            Shape::Constant(c) => *c,
            Shape::Cosine { xi, .. } => dot(xi, z).cos(),
            Shape::Gaussian { center, .. } => {
                let u = rel(z, center);
                (-dot(&u, &u)).exp()
            }
            Shape::Bump { center, .. } => bump_profile(norm(&rel(z, center))).0,
            Shape::Tent { cones } => cones
                .iter()
                .map(|c| c.amp * (1.0 - dist(z, &c.center) / c.radius).max(0.0))
                .sum(),
            Shape::Holder { center, alpha } => norm(&rel(z, center)).powf(*alpha).min(1.0),
            Shape::CutQuad(cq) => cq.eval(z),
            Shape::Affine { factor, lambda, shift, inner } => factor * inner.eval(&self.inner_point(z, *lambda, shift)),
            Shape::Sum { a, first, b, second } => a * first.eval(z) + b * second.eval(z),
        }
    }

    fn inner_point(&self, z: &[f64], lambda: f64, shift: &[f64]) -> Vec<f64> {
        z.iter().enumerate().map(|(i, v)| lambda * v + shift.get(i).copied().unwrap_or(0.0)).collect()
    }

    /// Gradient and Hessian at `z`, where they exist.
    pub fn derivatives(&self, z: &[f64]) -> Option<(Vec<f64>, DMatrix<f64>)> {
        let n = z.len();
        match &self.shape {
            Shape::Constant(_) => Some((vec![0.0; n], DMatrix::zeros(n, n))),
            Shape::Cosine { xi, .. } => {
                let ph = dot(xi, z);
                let g = scale(xi, -ph.sin());
                let h = DMatrix::from_fn(n, n, |i, j| -ph.cos() * xi[i] * xi[j]);
                Some((g, h))
            }
            Shape::Gaussian { center, .. } => {
                let u = rel(z, center);
                let r = norm(&u);
                let f = (-r * r).exp();
                Some(radial_derivatives(&u, -2.0 * r * f, (4.0 * r * r - 2.0) * f, -2.0 * f))
            }
            Shape::Bump { center, .. } => {
                let u = rel(z, center);
                let (_, f1, f2, f1r) = bump_profile(norm(&u));
                Some(radial_derivatives(&u, f1, f2, f1r))
            }
            Shape::Tent { cones } => {
                let mut g = vec![0.0; n];
                let mut h = DMatrix::zeros(n, n);
                for c in cones {
                    let u = sub(z, &c.center);
                    let r = norm(&u);
                    if r == 0.0 || r == c.radius {
                        return None;
                    }
                    if r < c.radius {
                        let (gc, hc) = radial_derivatives(&u, -c.amp / c.radius, 0.0, -c.amp / (c.radius * r));
                        g = axpy(&g, 1.0, &gc);
                        h += hc;
                    }
                }
                Some((g, h))
            }
            Shape::Holder { center, alpha } => {
                let u = rel(z, center);
                let r = norm(&u);
                if r == 0.0 || r == 1.0 {
                    return None;
                }
                if r > 1.0 {
                    return Some((vec![0.0; n], DMatrix::zeros(n, n)));
                }
                let a = *alpha;
                let f1 = a * r.powf(a - 1.0);
                let f2 = a * (a - 1.0) * r.powf(a - 2.0);
                Some(radial_derivatives(&u, f1, f2, a * r.powf(a - 2.0)))
            }
            Shape::CutQuad(cq) => Some(cq.derivatives(z)),
            Shape::Affine { factor, lambda, shift, inner } => {
                let (g, h) = inner.derivatives(&self.inner_point(z, *lambda, shift))?;
                Some((scale(&g, factor * lambda), h * (factor * lambda * lambda)))
            }
            Shape::Sum { a, first, b, second } => {
                let (g1, h1) = first.derivatives(z)?;
                let (g2, h2) = second.derivatives(z)?;
                Some((axpy(&scale(&g1, *a), *b, &g2), h1 * *a + h2 * *b))
            }
        }
    }

    pub fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        self.derivatives(z).map(|d| d.0)
    }

    pub fn hessian(&self, z: &[f64]) -> Option<DMatrix<f64>> {
        self.derivatives(z).map(|d| d.1)
    }

    /// Radius `η_x` of a ball around `x` on which the entry is `C²`.
    pub fn eta(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Constant(_) => 1.0,
            Shape::Cosine { eta, .. } | Shape::Gaussian { eta, .. } | Shape::Bump { eta, .. } => *eta,
            Shape::Tent { cones } => {
                let mut m = f64::INFINITY;
                for c in cones {
                    let d = dist(x, &c.center);
                    m = m.min(d).min((c.radius - d).abs());
                }
                0.5 * m
            }
            Shape::Holder { center, .. } => {
                let r = norm(&rel(x, center));
                0.5 * r.min((1.0 - r).abs())
            }
            Shape::CutQuad(_) => 0.5,
            Shape::Affine { lambda, shift, inner, .. } => inner.eta(&self.inner_point(x, *lambda, shift)) / lambda,
            Shape::Sum { first, second, .. } => first.eta(x).min(second.eta(x)),
        }
    }

    /// `C_x = ½ ‖∇²φ‖_{L∞(B_{η_x}(x))}` (an upper bound for it).
    pub fn c_bound(&self, x: &[f64]) -> f64 {
        let eta = self.eta(x);
        match &self.shape {
            Shape::Constant(_) => 0.0,
            Shape::Cosine { xi, .. } => 0.5 * dot(xi, xi),
            Shape::Gaussian { .. } => 1.0,
            Shape::Bump { .. } => 0.5 * bump_bounds().1,
            Shape::Tent { cones } => {
                let mut total = 0.0;
                for c in cones {
                    let d = dist(x, &c.center);
                    if d - eta < c.radius {
                        total += c.amp / (c.radius * (d - eta));
                    }
                }
                0.5 * total
            }
            Shape::Holder { center, alpha } => {
                let r = norm(&rel(x, center));
                if r > 1.0 {
                    0.0
                } else {
                    0.5 * alpha * (r - eta).powf(alpha - 2.0)
                }
            }
            Shape::CutQuad(cq) => {
                if dist(x, &cq.x0) + eta <= cq.r1 {
                    0.5 * spectral_norm(&cq.h)
                } else {
                    0.5 * 1.05 * self.sampled_hessian_max(x, eta)
                }
            }
            Shape::Affine { factor, lambda, shift, inner } => {
                factor.abs() * lambda * lambda * inner.c_bound(&self.inner_point(x, *lambda, shift))
            }
            Shape::Sum { a, first, b, second } => a.abs() * first.c_bound(x) + b.abs() * second.c_bound(x),
        }
    }

    fn sampled_hessian_max(&self, x: &[f64], radius: f64) -> f64 {
        let mut best: f64 = 0.0;
        for z in ball_samples(x, radius, 16, 128) {
            if let Some(h) = self.hessian(&z) {
                best = best.max(spectral_norm(&h));
            }
        }
        best
    }

    /// `sup_{y ∈ B_ε(x)} ‖∇²φ(y) − ∇²φ(x)‖`, sampled on 8 shells × 64 directions.
    pub fn hessian_oscillation(&self, x: &[f64], eps: f64) -> Result<f64> {
        let hx = self.hessian(x).ok_or_else(|| Error::Precondition(format!("{} has no Hessian at x", self.name)))?;
        let mut best: f64 = 0.0;
        for z in ball_samples(x, eps, 8, 64) {
            if let Some(h) = self.hessian(&z) {
                best = best.max(spectral_norm(&(h - &hx)));
            }
        }
        Ok(best)
    }

    /// `∫_{t0}^∞ φ(x + t v) t^{-1-2s} dt` in closed form, for entries whose
    /// restrictions to lines do not settle to a constant.
    pub fn line_tail(&self, x: &[f64], v: &[f64], s: f64, t0: f64) -> Option<f64> {
        match &self.shape {
            Shape::Constant(c) => Some(c * t0.powf(-2.0 * s) / (2.0 * s)),
            Shape::Cosine { xi, .. } => Some(cosine_power_tail(dot(xi, x), dot(xi, v), s, t0, 1.0)),
            Shape::Affine { factor, lambda, shift, inner } => {
                let y = self.inner_point(x, *lambda, shift);
                inner.line_tail(&y, v, s, lambda * t0).map(|t| factor * lambda.powf(2.0 * s) * t)
            }
            Shape::Sum { a, first, b, second } => {
                match (first.line_tail(x, v, s, t0), second.line_tail(x, v, s, t0)) {
                    (Some(t1), Some(t2)) => Some(a * t1 + b * t2),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Whether `line_tail` is available (it never depends on the line).
    pub fn has_line_tail(&self) -> bool {
        match &self.shape {
            Shape::Constant(_) | Shape::Cosine { .. } => true,
            Shape::Affine { inner, .. } => inner.has_line_tail(),
            Shape::Sum { first, second, .. } => first.has_line_tail() && second.has_line_tail(),
            _ => false,
        }
    }
}

/// `ω_φ(a)`, capped at `2‖φ‖_∞`.
pub fn modulus_of(phi: &TestFunction, a: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return domain(format!("modulus argument must be nonnegative, got {a}"));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    Ok(phi.modulus.eval(a).min(2.0 * phi.sup_norm))
}

/// Points of `B̄_r(x)`: the center plus `shells` spheres of directions.
pub fn ball_samples(x: &[f64], r: f64, shells: usize, dirs: usize) -> Vec<Vec<f64>> {
    let mut out = vec![x.to_vec()];
    let dirs = sphere_points(x.len(), dirs);
    for k in 1..=shells {
        let rho = r * k as f64 / shells as f64;
        for d in &dirs {
            out.push(axpy(x, rho, d));
        }
    }
    out
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Names accepted by [`parse_entry`].
pub const ENTRY_NAMES: [&str; 7] = ["constant", "cosine", "gaussian", "bump", "tent", "holder", "cutquad"];

/// The catalog used by the experiments.
pub fn catalog() -> Vec<TestFunction> {
    [
        "cosine:xi=1,0",
        "cosine:xi=0.8,-0.6",
        "gaussian",
        "bump",
        "tent",
        "holder",
        "cutquad",
        "cutquad:kind=identity",
        "cutquad:kind=affine",
    ]
    .iter()
    .map(|s| parse_entry(s).expect("catalog spec"))
    .collect()
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    let out: std::result::Result<Vec<f64>, _> = v.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let out = out.map_err(|e| Error::Parse(format!("{key}: {e}")))?;
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parse(format!("{key}: non-finite value")));
    }
    Ok(out)
}

fn parse_scalar(key: &str, v: &str) -> Result<f64> {
    match parse_list(key, v)?.as_slice() {
        [x] => Ok(*x),
        _ => Err(Error::Parse(format!("{key} takes a single value"))),
    }
}

/// Parses an entry spec `name[:key=v1,v2;key2=...]`.
pub fn parse_entry(spec: &str) -> Result<TestFunction> {
    let spec = spec.trim();
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n, r),
        None => (spec, ""),
    };
    let mut params: Vec<(&str, &str)> = Vec::new();
    for kv in rest.split(';').filter(|s| !s.trim().is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got '{kv}'")))?;
        params.push((k.trim(), v.trim()));
    }
    let get = |key: &str| params.iter().rev().find(|(k, _)| *k == key).map(|(_, v)| *v);
    let allowed: &[&str] = match name {
        "constant" => &["value"],
        "cosine" => &["xi", "eta"],
        "gaussian" | "bump" => &["center", "eta"],
        "tent" => &[],
        "holder" => &["alpha", "center"],
        "cutquad" => &["kind"],
        _ => {
            return Err(Error::Parse(format!("unknown entry '{name}'; known: {}", ENTRY_NAMES.join(", "))));
        }
    };
    if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(k)) {
        return Err(Error::Parse(format!("entry '{name}' has no parameter '{k}'")));
    }
    let eta = match get("eta") {
        Some(v) => {
            let e = parse_scalar("eta", v)?;
            if !(e > 0.0) {
                return Err(Error::Parse("eta must be positive".into()));
            }
            e
        }
        None => 0.5,
    };
    let center = match get("center") {
        Some(v) => {
            let c = parse_list("center", v)?;
            if c.len() > 3 {
                return Err(Error::Parse("center has more than 3 components".into()));
            }
            c
        }
        None => Vec::new(),
    };
    let f = match name {
        "constant" => TestFunction::constant(get("value").map(|v| parse_scalar("value", v)).transpose()?.unwrap_or(1.0)),
        "cosine" => {
            let xi = parse_list("xi", get("xi").unwrap_or("1,0"))?;
            if xi.is_empty() || xi.len() > 3 {
                return Err(Error::Parse("xi needs 1 to 3 components".into()));
            }
            TestFunction::cosine(xi, eta)
        }
        "gaussian" => TestFunction::gaussian(center, eta),
        "bump" => TestFunction::bump(center, eta),
        "tent" => TestFunction::tent(),
        "holder" => {
            let alpha = get("alpha").map(|v| parse_scalar("alpha", v)).transpose()?.unwrap_or(0.5);
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::Parse("alpha must lie in (0, 1)".into()));
            }
            TestFunction::holder(center, alpha)
        }
        _ => match get("kind").unwrap_or("generic") {
            "generic" => TestFunction::cutquad_generic(),
            "identity" => TestFunction::cutquad_identity(),
            "affine" => TestFunction::cutquad_affine(),
            k => return Err(Error::Parse(format!("unknown cutquad kind '{k}'"))),
        },
    };
    Ok(f)
}
