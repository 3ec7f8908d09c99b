use fraclap::fracmeasure::*;
use proptest::prelude::*;

/// Independent evaluation of `∫_0^∞ (1 - cos t) t^{-1-2s} dt`: termwise Taylor
/// integration on (0, 1), composite Simpson on (1, 200), and an asymptotic
/// integration-by-parts series beyond 200.
fn cosine_integral_oracle(s: f64) -> f64 {
    let nu = 1.0 + 2.0 * s;
    let mut near = 0.0;
    let mut fact = 1.0;
    for k in 1..30 {
        fact *= (2 * k - 1) as f64 * (2 * k) as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        near += sign / (fact * (2.0 * k as f64 - 2.0 * s));
    }
    let b = 200.0;
    let n = 400_000;
    let h = (b - 1.0) / n as f64;
    let g = |t: f64| t.cos() * t.powf(-nu);
    let mut simpson = g(1.0) + g(b);
    for i in 1..n {
        let t = 1.0 + i as f64 * h;
        simpson += if i % 2 == 1 { 4.0 } else { 2.0 } * g(t);
    }
    simpson *= h / 3.0;
    // ∫_B^∞ e^{it} t^{-ν} dt = Σ_k i (-i)^k (ν)_k e^{iB} B^{-ν-k}.
    let (mut re, mut im) = (0.0, 0.0);
    let (mut cr, mut ci) = (0.0, 1.0); // i · (-i)^k
    let mut poch = 1.0;
    for k in 0..8 {
        let mag = poch * b.powf(-nu - k as f64);
        let (er, ei) = (b.cos(), b.sin());
        re += mag * (cr * er - ci * ei);
        im += mag * (cr * ei + ci * er);
        let (nr, ni) = (ci, -cr);
        cr = nr;
        ci = ni;
        poch *= nu + k as f64;
    }
    let _ = im;
    let far = 1.0 / (2.0 * s) - (simpson + re);
    near + far
}

fn plain_panel_quadrature(g: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    // Composite 5-point Gauss–Legendre on geometrically graded panels.
    let nodes = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
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

#[test]
fn gamma_formula_matches_independent_cosine_integral() {
    for s in [0.55, 0.75, 0.95] {
        let want = 1.0 / (2.0 * cosine_integral_oracle(s));
        let got = frac_constant_1d(s).unwrap();
        assert!((got - want).abs() <= 1e-8 * want, "s = {s}: {got} vs {want}");
    }
}

#[test]
fn integral_route_matches_gamma_route() {
    let spec = QuadSpec::tight();
    for k in 1..100 {
        let s = 0.5 + k as f64 / 200.0;
        let a = frac_constant_1d(s).unwrap();
        let b = frac_constant_1d_by_integral(s, &spec).unwrap();
        assert!((a - b).abs() <= 1e-8 * a, "s = {s}: {a} vs {b}");
    }
}

#[test]
fn small_constant_stays_in_footnote_interval() {
    for k in 1..100 {
        let s = 0.5 + k as f64 / 200.0;
        let c = small_constant(s).unwrap();
        assert!(c > SMALL_CONSTANT_MIN && c < SMALL_CONSTANT_MAX, "s = {s}: c_s = {c}");
        let big = frac_constant_1d(s).unwrap();
        assert!(big > 0.0);
        assert!((big - s * (1.0 - s) * c).abs() <= 1e-15 * big);
    }
}

/// Radial–angular evaluation of `(∫_{R^2} (1 - cos z_1) |z|^{-2-2s} dz)^{-1}`.
/// The angular integral of `1 - cos(r cos θ)` is `2π (1 - J_0(r))`.
#[test]
fn two_dimensional_constant_matches_nested_quadrature() {
    let s = 0.6;
    fn bessel_j0(r: f64) -> f64 {
        // Angular average by the trapezoidal rule, spectrally accurate here.
        let n = 512;
        (0..n)
            .map(|k| (r * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()).cos())
            .sum::<f64>()
            / n as f64
    }
    let radial = |r: f64| 2.0 * std::f64::consts::PI * (1.0 - bessel_j0(r)) * r.powf(-1.0 - 2.0 * s);
    // Near zero 1 - J0(r) = r^2/4 - r^4/64 + ..., integrate that series exactly.
    let a: f64 = 1e-3;
    let near = 2.0 * std::f64::consts::PI
        * (a.powf(2.0 - 2.0 * s) / (4.0 * (2.0 - 2.0 * s)) - a.powf(4.0 - 2.0 * s) / (64.0 * (4.0 - 2.0 * s)));
    let big = 100.0f64;
    let mid = plain_panel_quadrature(radial, a, big, 20_000);
    // Beyond r = 100 use J0(r) ~ sqrt(2/(πr)) cos(r - π/4) and one integration by parts.
    let j0_tail = (2.0 / std::f64::consts::PI).sqrt() * -(big - std::f64::consts::FRAC_PI_4).sin() * big.powf(-1.5 - 2.0 * s);
    let far = 2.0 * std::f64::consts::PI * (big.powf(-2.0 * s) / (2.0 * s) - j0_tail);
    let want = 1.0 / (near + mid + far);
    let got = frac_constant_nd(2, s).unwrap();
    assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
}

#[test]
fn three_dimensional_constant_is_positive() {
    for k in 1..20 {
        let s = 0.5 + k as f64 / 40.0;
        assert!(frac_constant_nd(3, s).unwrap() > 0.0);
    }
}

#[test]
fn mass_matches_plain_quadrature() {
    let s = 0.7;
    let c = frac_constant_1d(s).unwrap();
    let want = plain_panel_quadrature(|t| c * t.powf(-2.4), 0.5, 2.0, 200);
    let got = mu_mass(s, 0.5, 2.0).unwrap();
    assert!((got - want).abs() <= 1e-10 * want);
    let eps = 0.37;
    let tail = mu_mass(s, eps, f64::INFINITY).unwrap();
    assert!((tail - c / (2.0 * s * eps.powf(2.0 * s))).abs() <= 1e-15 * tail);
    let tiny = mu_mass(s, 1.0, 1.0 + 1e-12).unwrap();
    assert!(tiny.abs() < 1e-10);
}

#[test]
fn first_moment_matches_plain_quadrature() {
    let s = 0.6;
    let c = frac_constant_1d(s).unwrap();
    let want = plain_panel_quadrature(|t| c * t * t.powf(-1.0 - 2.0 * s), 0.1, 1.0, 200);
    let got = mu_moment(s, 1, 0.1, 1.0).unwrap();
    assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
}

#[test]
fn constant_integrand_gives_mass() {
    let spec = QuadSpec::default();
    for (s, eps) in [(0.55, 0.01), (0.75, 0.3), (0.9, 2.0), (0.7, 100.0)] {
        let got = quad_mu_line(&|_| 1.0, s, eps, &spec).unwrap().value;
        let want = mu_mass(s, eps, f64::INFINITY).unwrap();
        assert!((got - want).abs() <= 1e-9 * want, "s {s} eps {eps}: {got} vs {want}");
    }
}

#[test]
fn truncated_square_gives_second_moment() {
    let spec = QuadSpec::default();
    for (s, eta) in [(0.6, 0.5), (0.8, 0.02), (0.95, 3.0)] {
        let f = move |t: f64| if t < eta { t * t } else { 0.0 };
        let got = quad_mu_line(&f, s, 0.0, &spec).unwrap().value;
        let want = mu_moment(s, 2, 0.0, eta).unwrap();
        assert!((got - want).abs() <= 1e-8 * want, "s {s}: {got} vs {want}");
    }
}

#[test]
fn fourier_symbol_of_second_difference() {
    let spec = QuadSpec::default();
    for s in [0.55, 0.75, 0.9] {
        for omega in [0.5, 1.0, 2.0] {
            for c in [0.0, 0.3, 1.1] {
                let f = move |t: f64| (c + omega * t).cos() + (c - omega * t).cos() - 2.0 * f64::cos(c);
                let tail = move |t0: f64| {
                    2.0 * f64::cos(c) * (cosine_power_tail(0.0, omega, s, t0, 1.0) - t0.powf(-2.0 * s) / (2.0 * s))
                };
                let got = quad_mu_line_with_tail(&f, Some(&tail), s, 0.0, &spec).unwrap().value;
                let want = -omega.powf(2.0 * s) * f64::cos(c);
                assert!(
                    (got - want).abs() <= 1e-7 * want.abs(),
                    "s {s} omega {omega} c {c}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn closed_form_cosine_tail_matches_finite_quadrature() {
    let spec = QuadSpec::tight();
    for s in [0.6, 0.85] {
        for (phase, freq) in [(0.2, 1.3), (1.0, -0.7), (0.4, 0.01)] {
            let (t0, t1) = (0.5, 40.0);
            let f = move |t: f64| (phase + freq * t).cos();
            let direct = quad_mu_interval(&f, s, t0, t1, &spec).unwrap().value / frac_constant_1d(s).unwrap();
            let closed = cosine_power_tail(phase, freq, s, t0, 1.0) - cosine_power_tail(phase, freq, s, t1, 1.0);
            assert!((direct - closed).abs() <= 1e-10 * direct.abs().max(1.0), "{direct} vs {closed}");
        }
    }
}

#[test]
fn generic_tail_handles_eventually_constant_integrands() {
    let spec = QuadSpec::tight();
    for s in [0.6, 0.85] {
        let f = |t: f64| 1.0 - (-t).exp();
        let got = quad_mu_line(&f, s, 0.5, &spec).unwrap().value;
        let split = quad_mu_interval(&f, s, 0.5, 300.0, &spec).unwrap().value
            + mu_mass(s, 300.0, f64::INFINITY).unwrap();
        assert!((got - split).abs() <= 1e-10 * got, "{got} vs {split}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mass_additivity(s in 0.51f64..0.99, a in 0.01f64..1.0, r1 in 1.1f64..5.0, r2 in 1.1f64..5.0) {
        let b = a * r1;
        let c = b * r2;
        let lhs = mu_mass(s, a, b).unwrap() + mu_mass(s, b, c).unwrap();
        let rhs = mu_mass(s, a, c).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn scaling_under_dilation(s in 0.55f64..0.95, lambda in 0.3f64..3.0, eps in 0.05f64..0.5) {
        let spec = QuadSpec::default();
        let f = |t: f64| (-(t - 1.0) * (t - 1.0)).exp();
        let dilated = move |t: f64| f(lambda * t);
        let lhs = quad_mu_line(&dilated, s, eps, &spec).unwrap().value;
        let rhs = lambda.powf(2.0 * s) * quad_mu_line(&f, s, lambda * eps, &spec).unwrap().value;
        prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1e-3), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn linearity_in_integrand(s in 0.55f64..0.95, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let spec = QuadSpec::default();
        let f = |t: f64| (-t).exp();
        let g = |t: f64| 1.0 / (1.0 + t * t);
        let combo = move |t: f64| a * f(t) + b * g(t);
        let lhs = quad_mu_line(&combo, s, 0.2, &spec).unwrap().value;
        let rhs = a * quad_mu_line(&f, s, 0.2, &spec).unwrap().value
            + b * quad_mu_line(&g, s, 0.2, &spec).unwrap().value;
        prop_assert!((lhs - rhs).abs() <= 1e-8 * (lhs.abs() + 1.0));
    }
}
