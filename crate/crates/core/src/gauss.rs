//! Gauss rules built with the Golub–Welsch eigenvalue method.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::special::gamma;

/// Nodes and weights of a quadrature rule on a fixed reference interval.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss–Jacobi rule for the weight (1-x)^alpha (1+x)^beta on [-1, 1].
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Rule {
    assert!(n >= 1 && alpha > -1.0 && beta > -1.0);
    let ab = alpha + beta;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jac[(k, k)] = diag;
        if k + 1 < n {
            let m = kf + 1.0;
            let denom = (2.0 * m + ab).powi(2) * (2.0 * m + ab + 1.0) * (2.0 * m + ab - 1.0);
            let off = (4.0 * m * (m + alpha) * (m + beta) * (m + ab) / denom).sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let mu0 = 2f64.powf(ab + 1.0) * gamma(alpha + 1.0) * gamma(beta + 1.0) / gamma(ab + 2.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Gauss–Legendre rule on [-1, 1], cached per order.
pub fn gauss_legendre(n: usize) -> &'static Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("rule cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Box::leak(Box::new(gauss_jacobi(n, 0.0, 0.0))))
}

type RuleCache = Mutex<HashMap<(usize, u64), std::sync::Arc<Rule>>>;

/// Rule for the weight tau^beta on [0, 1], cached per (order, beta).
pub fn power_weight_unit(n: usize, beta: f64) -> std::sync::Arc<Rule> {
    use std::sync::Arc;
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (n, beta.to_bits());
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&key) {
        return rule.clone();
    }
    let raw = gauss_jacobi(n, 0.0, beta);
    let scale = 2f64.powf(-(beta + 1.0));
    let rule = Arc::new(Rule {
        nodes: raw.nodes.iter().map(|x| 0.5 * (1.0 + x)).collect(),
        weights: raw.weights.iter().map(|w| w * scale).collect(),
    });
    cache
        .lock()
        .expect("rule cache poisoned")
        .insert(key, rule.clone());
    rule
}

/// Fixed-order Gauss–Legendre integral of `f` over [a, b].
pub fn integrate_gl(rule: &Rule, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(8);
        for deg in 0..16 {
            let got = integrate_gl(rule, 0.0, 1.0, |x| x.powi(deg));
            let want = 1.0 / (deg as f64 + 1.0);
            assert!((got - want).abs() < 1e-14, "degree {deg}: {got} vs {want}");
        }
        let wsum: f64 = rule.weights.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn power_weight_moments() {
        for &beta in &[-0.8, -0.5, -0.1, 0.3] {
            let rule = power_weight_unit(12, beta);
            for k in 0..20 {
                let got: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(t, w)| w * t.powi(k))
                    .sum();
                let want = 1.0 / (k as f64 + beta + 1.0);
                assert!((got - want).abs() < 1e-13 * want.max(1.0), "beta {beta} k {k}");
            }
        }
    }

    #[test]
    fn nodes_are_sorted_and_interior() {
        let rule = gauss_jacobi(16, 0.0, -0.6);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(rule.nodes.iter().all(|x| x.abs() < 1.0));
    }
}
