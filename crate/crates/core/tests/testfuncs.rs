use fraclap::testfuncs::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-radius..radius)).collect()
}

fn fd_gradient(f: &TestFunction, z: &[f64], h: f64) -> Vec<f64> {
    (0..z.len())
        .map(|i| {
            let mut a = z.to_vec();
            let mut b = z.to_vec();
            a[i] += h;
            b[i] -= h;
            (f.eval(&a) - f.eval(&b)) / (2.0 * h)
        })
        .collect()
}

fn entries() -> Vec<TestFunction> {
    let mut all = catalog();
    all.push(parse_entry("cosine:xi=1").unwrap());
    all.push(parse_entry("gaussian:center=0,0,0").unwrap());
    all.push(parse_entry("bump:center=0.1,0,0").unwrap());
    all.push(parse_entry("holder:alpha=0.3").unwrap());
    all
}

#[test]
fn invariant_suite_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for f in entries() {
        let dim = f.point.len();
        let mut skipped = 0;
        for _ in 0..200 {
            let z = random_point(&mut rng, dim, 3.0);
            assert!(f.eval(&z).abs() <= f.sup_norm, "{} at {z:?}", f.name);
            let Some((g, h)) = f.derivatives(&z) else {
                skipped += 1;
                continue;
            };
            let g1 = fd_gradient(&f, &z, 1e-5);
            let g2 = fd_gradient(&f, &z, 2e-5);
            let near_kink = g1.iter().zip(&g2).any(|(a, b)| (a - b).abs() > 1e-6);
            if near_kink {
                skipped += 1;
                continue;
            }
            for i in 0..dim {
                assert!((g[i] - g1[i]).abs() <= 1e-6 * (1.0 + g[i].abs()), "{} grad at {z:?}: {g:?} vs {g1:?}", f.name);
            }
            // Hessian columns against differences of the analytic gradient.
            for j in 0..dim {
                let hstep = 1e-5;
                let mut a = z.clone();
                let mut b = z.clone();
                a[j] += hstep;
                b[j] -= hstep;
                let (Some(ga), Some(gb)) = (f.gradient(&a), f.gradient(&b)) else { continue };
                for i in 0..dim {
                    let fd = (ga[i] - gb[i]) / (2.0 * hstep);
                    assert!((h[(i, j)] - fd).abs() <= 1e-5 * (1.0 + h[(i, j)].abs()), "{} hess at {z:?}", f.name);
                }
            }
        }
        assert!(skipped <= 10, "{}: {skipped} points skipped", f.name);
    }
}

#[test]
fn modulus_is_monotone_and_dominates_increments() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for f in entries() {
        let x = f.point.clone();
        let eta = f.eta(&x);
        let dim = x.len();
        let mut prev = 0.0;
        for k in 0..200 {
            let a = k as f64 * 0.02;
            let w = modulus_of(&f, a).unwrap();
            assert!(w >= prev, "{}", f.name);
            prev = w;
        }
        let mut checked = 0;
        while checked < 200 {
            let p = random_point(&mut rng, dim, 3.0);
            let dir = random_point(&mut rng, dim, 1.0);
            let a = rng.gen_range(0.0..1.5);
            let q: Vec<f64> = p.iter().zip(&dir).map(|(u, v)| u + a * v / 2f64.sqrt() / (dim as f64).sqrt()).collect();
            let outside = |z: &[f64]| z.iter().zip(&x).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt() > eta;
            if !outside(&p) || !outside(&q) {
                continue;
            }
            let d = p.iter().zip(&q).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
            let inc = (f.eval(&p) - f.eval(&q)).abs();
            assert!(inc <= modulus_of(&f, d).unwrap() * (1.0 + 1e-12) + 1e-15, "{}: {inc} over distance {d}", f.name);
            checked += 1;
        }
    }
}

#[test]
fn designated_points_and_regularity_data() {
    let g = parse_entry("gaussian").unwrap();
    assert_eq!(g.gradient(&g.point).unwrap(), vec![0.0, 0.0]);
    let cw = parse_entry("cosine:xi=1,0").unwrap();
    assert!(cw.gradient(&[0.0, 0.0]).unwrap().iter().all(|v| *v == 0.0));
    assert!(cw.gradient(&cw.point).unwrap()[0].abs() > 0.5);
    for f in entries() {
        let x = f.point.clone();
        let eta = f.eta(&x);
        assert!(eta > 0.0, "{}", f.name);
        // C_x dominates half the sampled Hessian norm on the ball.
        let c = f.c_bound(&x);
        for z in ball_samples(&x, eta, 8, 64) {
            if let Some(h) = f.hessian(&z) {
                let n = h.symmetric_eigenvalues().amax();
                assert!(0.5 * n <= c * (1.0 + 1e-9), "{}: {} > {c}", f.name, 0.5 * n);
            }
        }
    }
}

#[test]
fn modulus_examples() {
    let t = parse_entry("tent").unwrap();
    let lip = t.lipschitz.unwrap();
    for a in [0.0, 0.1, 1.0, 10.0] {
        assert_eq!(modulus_of(&t, a).unwrap(), (lip * a).min(2.0 * t.sup_norm));
    }
    let h = parse_entry("holder").unwrap();
    for a in [0.01, 0.5, 2.0] {
        assert_eq!(modulus_of(&h, a).unwrap(), a.powf(0.5).min(2.0));
    }
}

#[test]
fn closed_form_line_tails_match_quadrature() {
    let s = 0.7;
    let spec = fraclap::fracmeasure::QuadSpec::tight();
    let c = fraclap::fracmeasure::frac_constant_1d(s).unwrap();
    for f in [parse_entry("cosine:xi=0.8,-0.6").unwrap(), parse_entry("cosine:xi=0.8,-0.6").unwrap().affine_transform(-2.0, 1.3, vec![0.1, 0.2])] {
        let x = f.point.clone();
        let v = [0.6, 0.8];
        let (t0, t1) = (2.0, 30.0);
        let direct = fraclap::fracmeasure::quad_mu_interval(&|t: f64| f.eval(&[x[0] + t * v[0], x[1] + t * v[1]]), s, t0, t1, &spec).unwrap().value / c;
        let closed = f.line_tail(&x, &v, s, t0).unwrap() - f.line_tail(&x, &v, s, t1).unwrap();
        assert!((direct - closed).abs() < 1e-10, "{}: {direct} vs {closed}", f.name);
    }
}
