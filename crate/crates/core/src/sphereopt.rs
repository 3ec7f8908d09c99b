//! Extremization over the unit sphere `S^{N-1}` (`N ≤ 3`) and over closed balls.
//!
//! `N = 1` is exact over `{±1}`. `N = 2` evaluates an equiangular seed grid and
//! refines the best local maxima by golden-section search on the angle. `N = 3`
//! uses a Fibonacci lattice and a compass search in the tangent plane.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::testfuncs::TestFunction;
use crate::vecops::{axpy, dot, lex_cmp, norm, normalized};

/// Values that can be maximized over the sphere.
pub trait SphereValue: Copy + Send + Sync + std::fmt::Debug {
    fn compare(&self, other: &Self) -> Ordering;
    fn within(&self, other: &Self, tol: f64) -> bool;
    fn negated(self) -> Self;
}

impl SphereValue for f64 {
    fn compare(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }
    fn within(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol * self.abs().max(other.abs()).max(1.0)
    }
    fn negated(self) -> Self {
        -self
    }
}

/// A value `divergent · ∞ + finite`, ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extended {
    pub divergent: f64,
    pub finite: f64,
}

impl std::ops::Add for Extended {
    type Output = Extended;
    fn add(self, o: Extended) -> Extended {
        Extended { divergent: self.divergent + o.divergent, finite: self.finite + o.finite }
    }
}

impl SphereValue for Extended {
    fn compare(&self, other: &Self) -> Ordering {
        self.divergent.total_cmp(&other.divergent).then(self.finite.total_cmp(&other.finite))
    }
    fn within(&self, other: &Self, tol: f64) -> bool {
        self.divergent.within(&other.divergent, tol) && self.finite.within(&other.finite, tol)
    }
    fn negated(self) -> Self {
        Extended { divergent: -self.divergent, finite: -self.finite }
    }
}

/// Optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SphereOpts {
    pub seeds_2d: usize,
    pub seeds_3d: usize,
    /// Contraction steps of the refinement.
    pub max_iter: usize,
    /// Bracket contraction per step.
    pub contraction: f64,
    /// Number of seed maxima refined.
    pub refine_top: usize,
    /// Relative value tolerance used for ties.
    pub tie_tol: f64,
}

impl Default for SphereOpts {
    fn default() -> Self {
        SphereOpts { seeds_2d: 256, seeds_3d: 1024, max_iter: 40, contraction: 0.618, refine_top: 3, tie_tol: 1e-13 }
    }
}

impl SphereOpts {
    /// Smaller grids for inner problems of nested optimization.
    pub fn coarse(&self) -> Self {
        SphereOpts { seeds_2d: (self.seeds_2d / 4).max(16), seeds_3d: (self.seeds_3d / 4).max(64), ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds_2d < 4 || self.seeds_3d < 8 {
            return domain("too few sphere seeds");
        }
        if !(self.contraction > 0.0 && self.contraction < 1.0) {
            return domain("contraction must lie in (0, 1)");
        }
        if self.refine_top == 0 || !(self.tie_tol >= 0.0) {
            return domain("refine_top must be positive and tie_tol nonnegative");
        }
        Ok(())
    }
}

/// How an extremum was established.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub seeds: usize,
    pub refinement_iters: usize,
    /// Final angular (or spatial) bracket width.
    pub achieved_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremumResult<V> {
    pub argopt: Vec<f64>,
    pub value: V,
    pub certificate: Certificate,
}

/// Seed directions: `{±1}`, an equiangular circle grid or a Fibonacci lattice.
pub fn sphere_points(dim: usize, n: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![-1.0], vec![1.0]],
        2 => (0..n).map(|k| angle_dir(2.0 * PI * k as f64 / n as f64)).collect(),
        _ => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let a = golden * i as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
    }
}

fn angle_dir(theta: f64) -> Vec<f64> {
    vec![theta.cos(), theta.sin()]
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

fn better<V: SphereValue>(a: &(Vec<f64>, V), b: &(Vec<f64>, V)) -> bool {
    a.1.compare(&b.1) == Ordering::Greater
}

/// Among candidates within `tie_tol` of the best value, the lexicographically
/// smallest direction.
fn pick<V: SphereValue>(cands: &[(Vec<f64>, V)], tie_tol: f64) -> (Vec<f64>, V) {
    let mut best = cands[0].clone();
    for c in &cands[1..] {
        if better(c, &best) {
            best = c.clone();
        }
    }
    let mut chosen = best.clone();
    for c in cands {
        if c.1.within(&best.1, tie_tol) && lex_cmp(&c.0, &chosen.0) == Ordering::Less {
            chosen = c.clone();
        }
    }
    chosen
}

/// Maximizes `obj` over `S^{N-1}`.
pub fn sphere_max<V, F>(obj: &F, dim: usize, opts: &SphereOpts) -> Result<ExtremumResult<V>>
where
    V: SphereValue,
    F: Fn(&[f64]) -> Result<V> + Sync,
{
    check_dim(dim)?;
    opts.validate()?;
    let seeds = seed_values(obj, sphere_points(dim, seed_count(dim, opts)))?;
    max_from_seeds(obj, dim, seeds, opts)
}

fn seed_count(dim: usize, opts: &SphereOpts) -> usize {
    match dim {
        1 => 2,
        2 => opts.seeds_2d,
        _ => opts.seeds_3d,
    }
}

fn max_from_seeds<V, F>(obj: &F, dim: usize, seeds: Vec<(Vec<f64>, V)>, opts: &SphereOpts) -> Result<ExtremumResult<V>>
where
    V: SphereValue,
    F: Fn(&[f64]) -> Result<V> + Sync,
{
    match dim {
        1 => {
            let (argopt, value) = pick(&seeds, opts.tie_tol);
            Ok(ExtremumResult { argopt, value, certificate: Certificate { seeds: 2, refinement_iters: 0, achieved_tol: 0.0 } })
        }
        2 => max_circle(obj, seeds, opts),
        _ => max_sphere3(obj, seeds, opts),
    }
}

/// Maximum and minimum of the same objective, sharing the seed evaluations.
pub fn sphere_extrema<V, F>(obj: &F, dim: usize, opts: &SphereOpts) -> Result<(ExtremumResult<V>, ExtremumResult<V>)>
where
    V: SphereValue,
    F: Fn(&[f64]) -> Result<V> + Sync,
{
    check_dim(dim)?;
    opts.validate()?;
    let seeds = seed_values(obj, sphere_points(dim, seed_count(dim, opts)))?;
    let neg_seeds = seeds.iter().map(|(y, v)| (y.clone(), v.negated())).collect();
    let neg = |y: &[f64]| obj(y).map(V::negated);
    let (hi, lo) = rayon::join(|| max_from_seeds(obj, dim, seeds, opts), || max_from_seeds(&neg, dim, neg_seeds, opts));
    let lo = lo?;
    Ok((hi?, ExtremumResult { value: lo.value.negated(), ..lo }))
}

/// Minimizes `obj`; literally the negation of `sphere_max` of `-obj`.
pub fn sphere_min<V, F>(obj: &F, dim: usize, opts: &SphereOpts) -> Result<ExtremumResult<V>>
where
    V: SphereValue,
    F: Fn(&[f64]) -> Result<V> + Sync,
{
    let neg = |y: &[f64]| obj(y).map(V::negated);
    let r = sphere_max(&neg, dim, opts)?;
    Ok(ExtremumResult { value: r.value.negated(), ..r })
}

fn seed_values<V, F>(obj: &F, seeds: Vec<Vec<f64>>) -> Result<Vec<(Vec<f64>, V)>>
where
    V: SphereValue,
    F: Fn(&[f64]) -> Result<V> + Sync,
{
    seeds.into_par_iter().map(|y| obj(&y).map(|v| (y, v))).collect()
}

fn max_circle<V, F>(obj: &F, seeds: Vec<(Vec<f64>, V)>, opts: &SphereOpts) -> Result<ExtremumResult<V>>
where
    V: SphereValue,
    F: Fn(&[f64]) -> Result<V> + Sync,
{
    let n = seeds.len();
    // Local maxima of the periodic seed sequence, best first.
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&k| {
            let prev = &seeds[(k + n - 1) % n].1;
            let next = &seeds[(k + 1) % n].1;
            seeds[k].1.compare(prev) != Ordering::Less && seeds[k].1.compare(next) != Ordering::Less
        })
        .collect();
    peaks.sort_by(|&a, &b| seeds[b].1.compare(&seeds[a].1).then(a.cmp(&b)));
    peaks.truncate(opts.refine_top);
    let step = 2.0 * PI / n as f64;
    #[allow(clippy::type_complexity)]
    let refined: Vec<(Vec<(Vec<f64>, V)>, usize, f64)> = peaks
        .par_iter()
        .map(|&k| golden_section(obj, k as f64 * step - step, k as f64 * step + step, opts))
        .collect::<Result<_>>()?;
    let mut cands = seeds;
    let mut iters = 0;
    let mut width: f64 = 0.0;
    for (c, it, w) in refined {
        cands.extend(c);
        iters += it;
        width = width.max(w);
    }
    let (argopt, value) = pick(&cands, opts.tie_tol);
    Ok(ExtremumResult { argopt, value, certificate: Certificate { seeds: n, refinement_iters: iters, achieved_tol: width } })
}

type Refined<V> = (Vec<(Vec<f64>, V)>, usize, f64);

fn golden_section<V, F>(obj: &F, mut a: f64, mut b: f64, opts: &SphereOpts) -> Result<Refined<V>>
where
    V: SphereValue,
    F: Fn(&[f64]) -> Result<V> + Sync,
{
    let r = opts.contraction;
    let mut evals = Vec::new();
    let mut eval = |t: f64| -> Result<V> {
        let y = angle_dir(t);
        let v = obj(&y)?;
        evals.push((y, v));
        Ok(v)
    };
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    let mut iters = 0;
    while iters < opts.max_iter && b - a > 1e-15 {
        if fc.compare(&fd) != Ordering::Less {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = eval(d)?;
        }
        iters += 1;
    }
    Ok((evals, iters, b - a))
}

fn tangent_basis(y: &[f64]) -> [Vec<f64>; 2] {
    let helper = if y[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let proj = axpy(&helper, -dot(&helper, y), y);
    let e1 = normalized(&proj).expect("helper not parallel to y");
    let e2 = vec![y[1] * e1[2] - y[2] * e1[1], y[2] * e1[0] - y[0] * e1[2], y[0] * e1[1] - y[1] * e1[0]];
    [e1, e2]
}

fn max_sphere3<V, F>(obj: &F, seeds: Vec<(Vec<f64>, V)>, opts: &SphereOpts) -> Result<ExtremumResult<V>>
where
    V: SphereValue,
    F: Fn(&[f64]) -> Result<V> + Sync,
{
    let n = seeds.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| seeds[b].1.compare(&seeds[a].1).then(a.cmp(&b)));
    let spacing = (4.0 * PI / n as f64).sqrt();
    let mut starts: Vec<usize> = Vec::new();
    for &k in &order {
        if starts.len() >= opts.refine_top {
            break;
        }
        if starts.iter().all(|&j| dot(&seeds[j].0, &seeds[k].0) < (3.0 * spacing).cos()) {
            starts.push(k);
        }
    }
    let refined: Vec<Refined<V>> = starts
        .par_iter()
        .map(|&k| compass(obj, seeds[k].clone(), spacing, opts))
        .collect::<Result<_>>()?;
    let mut cands = seeds;
    let mut iters = 0;
    let mut width: f64 = 0.0;
    for (c, it, w) in refined {
        cands.extend(c);
        iters += it;
        width = width.max(w);
    }
    let (argopt, value) = pick(&cands, opts.tie_tol);
    Ok(ExtremumResult { argopt, value, certificate: Certificate { seeds: n, refinement_iters: iters, achieved_tol: width } })
}

fn compass<V, F>(obj: &F, start: (Vec<f64>, V), step0: f64, opts: &SphereOpts) -> Result<Refined<V>>
where
    V: SphereValue,
    F: Fn(&[f64]) -> Result<V> + Sync,
{
    let mut cur = start;
    let mut h = step0;
    let mut evals = Vec::new();
    let mut iters = 0;
    let mut moves = 0;
    while iters < opts.max_iter && moves < 20 * opts.max_iter {
        let [e1, e2] = tangent_basis(&cur.0);
        let mut improved = false;
        for (e, sgn) in [(&e1, 1.0), (&e1, -1.0), (&e2, 1.0), (&e2, -1.0)] {
            let y = normalized(&axpy(&cur.0, sgn * h, e)).expect("nonzero");
            let v = obj(&y)?;
            evals.push((y.clone(), v));
            if v.compare(&cur.1) == Ordering::Greater {
                cur = (y, v);
                improved = true;
                moves += 1;
                break;
            }
        }
        if !improved {
            h *= opts.contraction;
            iters += 1;
        }
    }
    Ok((evals, iters, h))
}

/// `sup_y inf_ỹ obj2(y, ỹ)`, with the inner problem solved for every outer
/// iterate. Returns the outer result (value = the sup–inf) and the inner
/// result at the chosen `y`.
pub fn supinf_pair<V, F>(obj2: &F, dim: usize, opts: &SphereOpts) -> Result<(ExtremumResult<V>, ExtremumResult<V>)>
where
    V: SphereValue,
    F: Fn(&[f64], &[f64]) -> Result<V> + Sync,
{
    let inner_opts = opts.coarse();
    let outer = |y: &[f64]| -> Result<V> { Ok(sphere_min(&|yt: &[f64]| obj2(y, yt), dim, &inner_opts)?.value) };
    let best = sphere_max(&outer, dim, opts)?;
    let inner = sphere_min(&|yt: &[f64]| obj2(&best.argopt, yt), dim, &inner_opts)?;
    Ok((ExtremumResult { value: inner.value, ..best }, inner))
}

/// `inf_ỹ sup_y obj2(y, ỹ)`, reported alongside the sup–inf for diagnostics.
pub fn infsup_pair<V, F>(obj2: &F, dim: usize, opts: &SphereOpts) -> Result<(ExtremumResult<V>, ExtremumResult<V>)>
where
    V: SphereValue,
    F: Fn(&[f64], &[f64]) -> Result<V> + Sync,
{
    let inner_opts = opts.coarse();
    let outer = |yt: &[f64]| -> Result<V> { Ok(sphere_max(&|y: &[f64]| obj2(y, yt), dim, &inner_opts)?.value) };
    let best = sphere_min(&outer, dim, opts)?;
    let inner = sphere_max(&|y: &[f64]| obj2(y, &best.argopt), dim, &inner_opts)?;
    Ok((ExtremumResult { value: inner.value, ..best }, inner))
}

/// Extremes of a function over a closed ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallExtrema {
    pub sup: f64,
    pub inf: f64,
    pub argsup: Vec<f64>,
    pub arginf: Vec<f64>,
    pub certificate: Certificate,
}

/// `sup` and `inf` of `φ` over `B̄_ε(x)`: shells × directions, then boundary
/// refinement on the sphere of radius `ε` and a compass search inside.
pub fn ball_extrema(phi: &TestFunction, x: &[f64], eps: f64, opts: &SphereOpts) -> Result<BallExtrema> {
    if !(eps > 0.0) || !eps.is_finite() {
        return domain(format!("ball radius must be positive, got {eps}"));
    }
    phi.check_point(x)?;
    let f = |z: &[f64]| phi.eval(z);
    let up = ball_max(&f, x, eps, opts)?;
    let neg = |z: &[f64]| -phi.eval(z);
    let down = ball_max(&neg, x, eps, opts)?;
    Ok(BallExtrema {
        sup: up.1,
        inf: -down.1,
        argsup: up.0,
        arginf: down.0,
        certificate: Certificate { seeds: up.2.seeds, refinement_iters: up.2.refinement_iters + down.2.refinement_iters, achieved_tol: up.2.achieved_tol.max(down.2.achieved_tol) },
    })
}

fn ball_max<F>(f: &F, x: &[f64], eps: f64, opts: &SphereOpts) -> Result<(Vec<f64>, f64, Certificate)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = x.len();
    let ndirs = match dim {
        1 => 2,
        2 => 64,
        _ => 256,
    };
    let shells = if dim == 1 { 64 } else { 8 };
    let dirs = sphere_points(dim, ndirs);
    let mut pts = vec![x.to_vec()];
    for k in 1..=shells {
        let rho = eps * k as f64 / shells as f64;
        for d in &dirs {
            pts.push(axpy(x, rho, d));
        }
    }
    let mut cands: Vec<(Vec<f64>, f64)> = pts.into_par_iter().map(|z| {
        let v = f(&z);
        (z, v)
    }).collect();
    // Boundary.
    let boundary = sphere_max(&|y: &[f64]| Ok(f(&axpy(x, eps, y))), dim, opts)?;
    cands.push((axpy(x, eps, &boundary.argopt), boundary.value));
    // Interior compass search from the best sample.
    let start = pick(&cands, opts.tie_tol);
    let mut cur = start;
    let mut h = eps / shells as f64;
    let mut iters = 0;
    let mut moves = 0;
    while iters < opts.max_iter && moves < 50 * opts.max_iter {
        let mut improved = false;
        for i in 0..dim {
            for sgn in [1.0, -1.0] {
                let mut z = cur.0.clone();
                z[i] += sgn * h;
                let off = crate::vecops::sub(&z, x);
                let r = norm(&off);
                if r > eps {
                    z = axpy(x, eps / r, &off);
                }
                let v = f(&z);
                if v > cur.1 {
                    cur = (z, v);
                    improved = true;
                }
            }
        }
        if improved {
            moves += 1;
        } else {
            h *= opts.contraction;
            iters += 1;
        }
    }
    cands.push(cur);
    let (arg, value) = pick(&cands, opts.tie_tol);
    let cert = Certificate {
        seeds: cands.len(),
        refinement_iters: iters + boundary.certificate.refinement_iters,
        achieved_tol: h.max(eps * boundary.certificate.achieved_tol),
    };
    Ok((arg, value, cert))
}

/// Rotates a direction by the angle `theta` (N = 2 only; used in tests).
pub fn rotate2(y: &[f64], theta: f64) -> Vec<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    vec![c * y[0] - s * y[1], s * y[0] + c * y[1]]
}
