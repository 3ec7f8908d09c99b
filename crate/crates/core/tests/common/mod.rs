#![allow(dead_code)]

/// Composite 5-point Gauss–Legendre on `panels` geometrically graded panels of `[a, b]`.
pub fn graded_gauss5(g: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let nodes = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    let weights = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let ratio = (b / a).powf(1.0 / panels as f64);
    let mut total = 0.0;
    let mut lo = a;
    for _ in 0..panels {
        let hi = lo * ratio;
        let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        total += r * nodes.iter().zip(&weights).map(|(x, w)| w * g(m + r * x)).sum::<f64>();
        lo = hi;
    }
    total
}

/// Composite 5-point Gauss–Legendre on `panels` equal panels of `[a, b]`.
pub fn uniform_gauss5(g: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let nodes = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    let weights = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let (m, r) = (a + (k as f64 + 0.5) * h, 0.5 * h);
        total += r * nodes.iter().zip(&weights).map(|(x, w)| w * g(m + r * x)).sum::<f64>();
    }
    total
}

/// `∫_B^∞ cos(c + ω t) t^{-ν} dt` by the asymptotic integration-by-parts series,
/// accurate for `ωB ≫ ν`.
pub fn oscillatory_tail(c: f64, omega: f64, nu: f64, b: f64) -> f64 {
    // Re of e^{ic} ∫_B^∞ e^{iωt} t^{-ν} dt = Re e^{ic} Σ_k i (-i)^k ... scaled by ω.
    let (mut re, mut cr, mut ci) = (0.0, 0.0, 1.0);
    let mut poch = 1.0;
    for k in 0..10 {
        let mag = poch * b.powf(-nu - k as f64) / omega.powi(k + 1);
        let ph = c + omega * b;
        re += mag * (cr * ph.cos() - ci * ph.sin());
        let (nr, ni) = (ci, -cr);
        cr = nr;
        ci = ni;
        poch *= nu + k as f64;
    }
    re
}
