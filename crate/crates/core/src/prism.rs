//! Averages over truncated spherical prisms
//! `T^{ε,R,α}(y) = {z : sin(∠(y,z)/2) < α, ⟨y,z⟩ > 0, ε < |z| < R}`
//! and their grid counterpart.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fracmeasure::{check_order, frac_constant_nd};
use crate::gauss::{gauss_legendre, Rule};
use crate::sphereopt::{sphere_extrema, sphere_points, SphereOpts};
use crate::testfuncs::TestFunction;
use crate::vecops::{axpy, dot, lex_cmp, norm, normalized};

/// One prism: radii `eps < r`, opening `alpha` and the axis direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrismSpec {
    pub eps: f64,
    pub r: f64,
    pub alpha: f64,
    pub axis: Vec<f64>,
}

impl PrismSpec {
    pub fn new(eps: f64, r: f64, alpha: f64, axis: Vec<f64>) -> Result<Self> {
        let spec = Self { eps, r, alpha, axis };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_radii(self.eps, self.r, self.alpha)?;
        if !(1..=3).contains(&self.axis.len()) {
            return Err(Error::UnsupportedDimension(self.axis.len()));
        }
        if normalized(&self.axis).is_none() {
            return domain("prism axis must be a nonzero finite vector");
        }
        Ok(())
    }

    fn unit_axis(&self) -> Vec<f64> {
        normalized(&self.axis).expect("validated axis")
    }
}

fn check_radii(eps: f64, r: f64, alpha: f64) -> Result<()> {
    if !(eps > 0.0 && r > eps && r.is_finite()) {
        return domain(format!("prism radii need 0 < eps < R < ∞, got eps = {eps}, R = {r}"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("prism opening alpha = {alpha} must lie in (0, 1)"));
    }
    Ok(())
}

/// Grid parameters of the discrete operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub h: f64,
    pub n_directions: usize,
}

/// Product-rule parameters for [`prism_average`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrismQuad {
    /// Geometric panels on `(ε, R)`.
    pub radial_panels: usize,
    /// Gauss–Legendre nodes per radial panel.
    pub radial_nodes: usize,
    /// Angular nodes: the arc rule in 2-D, azimuths (and half as many polar
    /// nodes) in 3-D.
    pub cap_nodes: usize,
}

impl Default for PrismQuad {
    fn default() -> Self {
        Self { radial_panels: 16, radial_nodes: 16, cap_nodes: 64 }
    }
}

impl PrismQuad {
    /// A cheaper rule for three-dimensional optimization loops.
    pub fn light() -> Self {
        Self { radial_panels: 8, radial_nodes: 8, cap_nodes: 16 }
    }

    fn validate(&self) -> Result<()> {
        if self.radial_panels == 0 || self.radial_nodes < 2 || self.cap_nodes < 2 {
            return domain("prism rule needs at least 1 panel, 2 radial nodes and 2 cap nodes");
        }
        Ok(())
    }

    fn halved(&self) -> Self {
        Self {
            radial_panels: self.radial_panels,
            radial_nodes: (self.radial_nodes / 2).max(2),
            cap_nodes: (self.cap_nodes / 2).max(2),
        }
    }
}

/// Half-angle of the cap `{|z| = 1} ∩ T^{0,∞,α}`: `min(2 arcsin α, π/2)`.
pub fn cap_angle(alpha: f64) -> f64 {
    (2.0 * alpha.asin()).min(0.5 * PI)
}

/// `|S_α|`, the measure of the unit-sphere cap cut out by the prism.
pub fn cap_area(dim: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("prism opening alpha = {alpha} must lie in (0, 1)"));
    }
    let th = cap_angle(alpha);
    match dim {
        1 => Ok(1.0),
        2 => Ok(2.0 * th),
        3 => Ok(2.0 * PI * (1.0 - th.cos())),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Membership test with the unit axis precomputed.
struct Membership {
    y: Vec<f64>,
    eps: f64,
    r: f64,
    alpha: f64,
}

impl Membership {
    fn new(spec: &PrismSpec) -> Self {
        Self { y: spec.unit_axis(), eps: spec.eps, r: spec.r, alpha: spec.alpha }
    }

    fn contains(&self, z: &[f64]) -> bool {
        let nz = norm(z);
        if !(nz > self.eps && nz < self.r) || dot(&self.y, z) <= 0.0 {
            return false;
        }
        let chord2: f64 = self.y.iter().zip(z).map(|(a, b)| (a - b / nz).powi(2)).sum();
        0.5 * chord2.sqrt() < self.alpha
    }
}

/// Membership in the open prism; the angle enters through the chord
/// `|ŷ − ẑ| = 2 sin(∠/2)`.
pub fn prism_contains(spec: &PrismSpec, z: &[f64]) -> bool {
    Membership::new(spec).contains(z)
}

/// `μ_s^N(T) = C(N,s) |S_α| (ε^{-2s} − R^{-2s}) / (2s)`.
pub fn prism_measure(spec: &PrismSpec, s: f64) -> Result<f64> {
    spec.validate()?;
    check_order(s)?;
    let dim = spec.axis.len();
    Ok(frac_constant_nd(dim, s)? * cap_area(dim, spec.alpha)? * radial_mass(s, spec.eps, spec.r))
}

fn radial_mass(s: f64, eps: f64, r: f64) -> f64 {
    (eps.powf(-2.0 * s) - r.powf(-2.0 * s)) / (2.0 * s)
}

/// Orthonormal vectors completing `y` to a basis of `R³`.
fn frame3(y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = (0..3)
        .min_by(|&i, &j| y[i].abs().total_cmp(&y[j].abs()))
        .expect("three components");
    let mut a = vec![0.0; 3];
    a[k] = 1.0;
    let e1 = normalized(&axpy(&a, -dot(&a, y), y)).expect("independent of y");
    let e2 = vec![
        y[1] * e1[2] - y[2] * e1[1],
        y[2] * e1[0] - y[0] * e1[2],
        y[0] * e1[1] - y[1] * e1[0],
    ];
    (e1, e2)
}

/// Cap directions around the unit axis `y` with their surface weights.
fn cap_rule(y: &[f64], alpha: f64, n: usize) -> Vec<(Vec<f64>, f64)> {
    let th = cap_angle(alpha);
    match y.len() {
        1 => vec![(y.to_vec(), 1.0)],
        2 => {
            let rule = gauss_legendre(n);
            rule.nodes
                .iter()
                .zip(&rule.weights)
                .map(|(u, w)| {
                    let a = th * u;
                    let (c, s) = (a.cos(), a.sin());
                    (vec![c * y[0] - s * y[1], s * y[0] + c * y[1]], w * th)
                })
                .collect()
        }
        _ => {
            let (e1, e2) = frame3(y);
            let polar = gauss_legendre((n / 2).max(2));
            let lo = th.cos();
            let half = 0.5 * (1.0 - lo);
            let mut out = Vec::with_capacity(polar.nodes.len() * n);
            for (u, w) in polar.nodes.iter().zip(&polar.weights) {
                let c = lo + half * (1.0 + u);
                let sn = (1.0 - c * c).max(0.0).sqrt();
                for k in 0..n {
                    let phi = 2.0 * PI * k as f64 / n as f64;
                    let d: Vec<f64> = (0..3).map(|i| c * y[i] + sn * (phi.cos() * e1[i] + phi.sin() * e2[i])).collect();
                    out.push((d, w * half * 2.0 * PI / n as f64));
                }
            }
            out
        }
    }
}

/// Radial nodes on `(ε, R)` with weights for `t^{-1-2s} dt`.
fn radial_rule(eps: f64, r: f64, s: f64, panels: usize, nodes: usize) -> Vec<(f64, f64)> {
    let rule: &Rule = gauss_legendre(nodes);
    let ratio = (r / eps).powf(1.0 / panels as f64);
    let mut out = Vec::with_capacity(panels * nodes);
    let mut a = eps;
    for k in 0..panels {
        let b = if k + 1 == panels { r } else { a * ratio };
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (u, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = mid + half * u;
            out.push((t, w * half * t.powf(-1.0 - 2.0 * s)));
        }
        a = b;
    }
    out
}

fn prism_sum(phi: &TestFunction, x: &[f64], spec: &PrismSpec, s: f64, quad: &PrismQuad) -> f64 {
    let y = spec.unit_axis();
    let cap = cap_rule(&y, spec.alpha, quad.cap_nodes);
    let radial = radial_rule(spec.eps, spec.r, s, quad.radial_panels, quad.radial_nodes);
    let (mut num, mut den) = (0.0, 0.0);
    for (d, wc) in &cap {
        let mut line = 0.0;
        let mut mass = 0.0;
        for &(t, wr) in &radial {
            line += wr * phi.eval(&axpy(x, t, d));
            mass += wr;
        }
        num += wc * line;
        den += wc * mass;
    }
    num / den
}

/// Normalized prism average with an error indicator from a half-order rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrismValue {
    pub value: f64,
    pub error: f64,
}

/// `⨏_{T^{ε,R,α}(y)} φ(x + z) dμ_s^N(z)` by a product rule normalized with
/// its own weights, so constants are reproduced to rounding.
pub fn prism_average_detail(phi: &TestFunction, x: &[f64], spec: &PrismSpec, s: f64, quad: &PrismQuad) -> Result<PrismValue> {
    spec.validate()?;
    check_order(s)?;
    quad.validate()?;
    phi.check_point(x)?;
    if x.len() != spec.axis.len() {
        return domain("prism axis and point have different dimensions");
    }
    let value = prism_sum(phi, x, spec, s, quad);
    let coarse = prism_sum(phi, x, spec, s, &quad.halved());
    Ok(PrismValue { value, error: (value - coarse).abs() })
}

pub fn prism_average(phi: &TestFunction, x: &[f64], spec: &PrismSpec, s: f64, quad: &PrismQuad) -> Result<f64> {
    Ok(prism_average_detail(phi, x, spec, s, quad)?.value)
}

/// Extremal prism averages over the axis direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrismExtrema {
    pub value: f64,
    pub sup: f64,
    pub inf: f64,
    pub argsup: Vec<f64>,
    pub arginf: Vec<f64>,
    pub quad_error: f64,
}

/// `𝒜̄_ε^o φ(x) = ½(sup_y ⨏_T + inf_y ⨏_T)`.
#[allow(clippy::too_many_arguments)]
pub fn average_prism_o(
    phi: &TestFunction,
    x: &[f64],
    eps: f64,
    r: f64,
    alpha: f64,
    s: f64,
    quad: &PrismQuad,
    opts: &SphereOpts,
) -> Result<PrismExtrema> {
    check_radii(eps, r, alpha)?;
    check_order(s)?;
    quad.validate()?;
    phi.check_point(x)?;
    let obj = |y: &[f64]| -> Result<f64> {
        let spec = PrismSpec { eps, r, alpha, axis: y.to_vec() };
        Ok(prism_sum(phi, x, &spec, s, quad))
    };
    let (hi, lo) = sphere_extrema(&obj, x.len(), opts)?;
    let e_hi = prism_average_detail(phi, x, &PrismSpec { eps, r, alpha, axis: hi.argopt.clone() }, s, quad)?.error;
    let e_lo = prism_average_detail(phi, x, &PrismSpec { eps, r, alpha, axis: lo.argopt.clone() }, s, quad)?.error;
    Ok(PrismExtrema {
        value: 0.5 * (hi.value + lo.value),
        sup: hi.value,
        inf: lo.value,
        argsup: hi.argopt,
        arginf: lo.argopt,
        quad_error: 0.5 * (e_hi + e_lo),
    })
}

/// Grid directions: `±1` in 1-D, `e^{2πik/n}` in 2-D, a Fibonacci lattice in 3-D.
pub fn grid_directions(dim: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    if n < 2 {
        return domain(format!("need at least 2 grid directions, got {n}"));
    }
    match dim {
        1..=3 => Ok(sphere_points(dim, n)),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// A lattice point `x_j = h·index` with `|x_j|` and `|x_j|^{-N-2s}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StencilPoint {
    pub index: Vec<i64>,
    pub point: Vec<f64>,
    pub norm: f64,
    pub weight: f64,
}

fn lattice_point(index: &[i64], h: f64, s: f64) -> StencilPoint {
    let point: Vec<f64> = index.iter().map(|&i| h * i as f64).collect();
    let nrm = norm(&point);
    let weight = weight_of(nrm, point.len(), s);
    StencilPoint { index: index.to_vec(), point, norm: nrm, weight }
}

fn stencil_order(a: &StencilPoint, b: &StencilPoint) -> Ordering {
    a.norm.total_cmp(&b.norm).then_with(|| lex_cmp(&a.point, &b.point))
}

fn check_grid(dim: usize, eps: f64, grid: &GridSpec) -> Result<()> {
    if !(1..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    if !(grid.h > 0.0 && grid.h < eps) {
        return domain(format!("grid width h = {} must lie in (0, eps = {eps})", grid.h));
    }
    if grid.n_directions < 2 {
        return domain("need at least 2 grid directions");
    }
    Ok(())
}

/// A lattice index with its norm; the point is `h · idx`.
#[derive(Debug, Clone, Copy)]
struct Node {
    idx: [i32; 3],
    norm: f64,
}

fn node_point(n: &Node, h: f64) -> [f64; 3] {
    [h * n.idx[0] as f64, h * n.idx[1] as f64, h * n.idx[2] as f64]
}

/// Sorted lattice nodes of the annulus; the order agrees with
/// `stencil_order` because `i ↦ h·i` is increasing.
fn annulus_nodes(dim: usize, h: f64, eps: f64, r: f64) -> Vec<Node> {
    let m = (r / h).ceil() as i32;
    let span = |d: usize| if d < dim { -m..=m } else { 0..=0 };
    let mut out: Vec<Node> = span(0)
        .into_par_iter()
        .flat_map_iter(|i| {
            span(1).flat_map(move |j| {
                span(2).filter_map(move |k| {
                    let mut n = Node { idx: [i, j, k], norm: 0.0 };
                    let p = node_point(&n, h);
                    n.norm = norm(&p[..dim]);
                    (n.norm > eps && n.norm < r).then_some(n)
                })
            })
        })
        .collect();
    out.par_sort_unstable_by(|a, b| a.norm.total_cmp(&b.norm).then_with(|| a.idx.cmp(&b.idx)));
    out
}

/// Lattice points of `hZ^N` in the annulus `ε < |x| < R`, sorted by
/// ascending norm with lexicographic ties.
pub fn annulus_points(dim: usize, h: f64, eps: f64, r: f64, s: f64) -> Vec<StencilPoint> {
    annulus_nodes(dim, h, eps, r)
        .iter()
        .map(|n| lattice_point(&n.idx[..dim].iter().map(|&i| i as i64).collect::<Vec<_>>(), h, s))
        .collect()
}

/// Points of `T^{ε,R,α}(y) ∩ hZ^N` in summation order.
pub fn prism_stencil(spec: &PrismSpec, h: f64, s: f64) -> Result<Vec<StencilPoint>> {
    spec.validate()?;
    let pts = annulus_points(spec.axis.len(), h, spec.eps, spec.r, s);
    let m = Membership::new(spec);
    Ok(pts.into_iter().filter(|p| m.contains(&p.point)).collect())
}

/// Writes a stencil as CSV: index and point components, norm, weight.
pub fn write_stencil_csv<W: Write>(out: W, stencil: &[StencilPoint]) -> Result<()> {
    let io = |e: csv::Error| Error::Domain(format!("csv output failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let dim = stencil.first().map_or(0, |p| p.point.len());
    let mut header: Vec<String> = (0..dim).map(|i| format!("i{i}")).collect();
    header.extend((0..dim).map(|i| format!("x{i}")));
    header.push("norm".into());
    header.push("weight".into());
    w.write_record(&header).map_err(io)?;
    for p in stencil {
        let mut rec: Vec<String> = p.index.iter().map(|i| i.to_string()).collect();
        rec.extend(p.point.iter().map(|x| format!("{x:e}")));
        rec.push(format!("{:e}", p.norm));
        rec.push(format!("{:e}", p.weight));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Domain(format!("csv output failed: {e}")))?;
    Ok(())
}

/// Discrete operator value with the per-direction sums it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteAverage {
    pub value: f64,
    /// `Σ_j φ(x_k + x_j)/|x_j|^{N+2s}` per direction.
    pub sums: Vec<f64>,
    pub argmax: usize,
    pub argmin: usize,
}

fn discrete_prefactor(dim: usize, h: f64, eps: f64, r: f64, alpha: f64, s: f64) -> Result<f64> {
    Ok(s * h.powi(dim as i32) / (cap_area(dim, alpha)? * (eps.powf(-2.0 * s) - r.powf(-2.0 * s))))
}

fn weight_of(norm: f64, dim: usize, s: f64) -> f64 {
    norm.powf(-(dim as f64) - 2.0 * s)
}

fn direction_sum(phi: &TestFunction, xk: &[f64], pts: &[&StencilPoint]) -> f64 {
    let mut acc = 0.0;
    for p in pts {
        acc += phi.eval(&axpy(xk, 1.0, &p.point)) * p.weight;
    }
    acc
}

fn finish(sums: Vec<f64>, pre: f64) -> DiscreteAverage {
    let mut argmax = 0;
    let mut argmin = 0;
    for (i, v) in sums.iter().enumerate() {
        if *v > sums[argmax] {
            argmax = i;
        }
        if *v < sums[argmin] {
            argmin = i;
        }
    }
    DiscreteAverage { value: pre * (sums[argmax] + sums[argmin]), sums, argmax, argmin }
}

/// `𝒜̄_ε^d φ(x_k) = s h^N / (|S_α|(ε^{-2s} − R^{-2s})) · (max_i + min_i) Σ_j φ(x_k + x_j)/|x_j|^{N+2s}`.
#[allow(clippy::too_many_arguments)]
pub fn average_discrete(
    phi: &TestFunction,
    xk: &[f64],
    eps: f64,
    r: f64,
    alpha: f64,
    s: f64,
    grid: &GridSpec,
) -> Result<DiscreteAverage> {
    check_radii(eps, r, alpha)?;
    check_order(s)?;
    phi.check_point(xk)?;
    let dim = xk.len();
    check_grid(dim, eps, grid)?;
    let dirs = grid_directions(dim, grid.n_directions)?;
    let nodes = annulus_nodes(dim, grid.h, eps, r);
    let sums: Vec<Result<f64>> = dirs
        .par_iter()
        .map(|y| {
            let m = Membership::new(&PrismSpec { eps, r, alpha, axis: y.clone() });
            let mut acc = 0.0;
            let mut count = 0usize;
            for n in &nodes {
                let p = node_point(n, grid.h);
                let p = &p[..dim];
                if m.contains(p) {
                    acc += phi.eval(&axpy(xk, 1.0, p)) * weight_of(n.norm, dim, s);
                    count += 1;
                }
            }
            if count == 0 {
                return Err(Error::DegenerateStencil { h: grid.h, eps, alpha });
            }
            Ok(acc)
        })
        .collect();
    let sums = sums.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(finish(sums, discrete_prefactor(dim, grid.h, eps, r, alpha, s)?))
}

/// Reference implementation of [`average_discrete`]: a plain loop over the
/// lattice box for every direction, sorted into the same summation order.
#[allow(clippy::too_many_arguments)]
pub fn average_discrete_naive(
    phi: &TestFunction,
    xk: &[f64],
    eps: f64,
    r: f64,
    alpha: f64,
    s: f64,
    grid: &GridSpec,
) -> Result<DiscreteAverage> {
    check_radii(eps, r, alpha)?;
    check_order(s)?;
    let dim = xk.len();
    check_grid(dim, eps, grid)?;
    let m = (r / grid.h).ceil() as i64;
    let mut sums = Vec::new();
    for y in grid_directions(dim, grid.n_directions)? {
        let spec = PrismSpec { eps, r, alpha, axis: y };
        let mut inside: Vec<StencilPoint> = Vec::new();
        let range = |d: usize| if d < dim { -m..=m } else { 0..=0 };
        for i in range(0) {
            for j in range(1) {
                for k in range(2) {
                    let idx: Vec<i64> = [i, j, k][..dim].to_vec();
                    let p = lattice_point(&idx, grid.h, s);
                    if prism_contains(&spec, &p.point) {
                        inside.push(p);
                    }
                }
            }
        }
        if inside.is_empty() {
            return Err(Error::DegenerateStencil { h: grid.h, eps, alpha });
        }
        inside.sort_by(stencil_order);
        let refs: Vec<&StencilPoint> = inside.iter().collect();
        sums.push(direction_sum(phi, xk, &refs));
    }
    Ok(finish(sums, discrete_prefactor(dim, grid.h, eps, r, alpha, s)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_examples() {
        let spec = PrismSpec::new(0.5, 2.0, 0.3, vec![0.6, 0.8]).unwrap();
        assert!(prism_contains(&spec, &[0.75, 1.0]));
        assert!(!prism_contains(&spec, &[-0.75, -1.0]));
        assert!(!prism_contains(&spec, &[0.3, 0.4]));
        assert!(!prism_contains(&spec, &[0.0, 0.0]));
    }

    #[test]
    fn cap_area_in_each_dimension() {
        assert_eq!(cap_area(1, 0.3).unwrap(), 1.0);
        assert!((cap_area(2, 0.5).unwrap() - 2.0 * PI / 3.0).abs() < 1e-15);
        // past α = 1/√2 the half-space condition takes over: a half circle, a hemisphere
        assert!((cap_area(2, 0.9).unwrap() - PI).abs() < 1e-15);
        assert!((cap_area(3, 0.9).unwrap() - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn cap_rules_sum_to_cap_area() {
        for dim in [2, 3] {
            let mut y = vec![0.0; dim];
            y[0] = 1.0;
            for alpha in [0.05, 0.4, 0.9] {
                let total: f64 = cap_rule(&y, alpha, 16).iter().map(|c| c.1).sum();
                assert!((total - cap_area(dim, alpha).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn annulus_is_sorted() {
        let pts = annulus_points(2, 0.1, 0.25, 0.6, 0.75);
        assert!(pts.windows(2).all(|w| stencil_order(&w[0], &w[1]) != Ordering::Greater));
        assert!(pts.iter().all(|p| p.norm > 0.25 && p.norm < 0.6));
    }
}
