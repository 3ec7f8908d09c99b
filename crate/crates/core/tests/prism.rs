mod common;

use common::graded_gauss5;
use fraclap::bounds::{lemma51_bound, BoundInputs};
use fraclap::corelap::line_average;
use fraclap::error::Error;
use fraclap::fracmeasure::frac_constant_nd;
use fraclap::prism::*;
use fraclap::sphereopt::rotate2;
use fraclap::testfuncs::{parse_entry, TestFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Monte-Carlo estimate of `μ_s^N(T)` from uniform samples in the box `[-R, R]^N`.
fn mc_measure(spec: &PrismSpec, s: f64, n: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let dim = spec.axis.len();
    let c = frac_constant_nd(dim, s).unwrap();
    let vol = (2.0 * spec.r).powi(dim as i32);
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..n {
        let z: Vec<f64> = (0..dim).map(|_| rng.gen_range(-spec.r..spec.r)).collect();
        let v = if prism_contains(spec, &z) {
            let r = z.iter().map(|x| x * x).sum::<f64>().sqrt();
            c * vol * r.powf(-(dim as f64) - 2.0 * s)
        } else {
            0.0
        };
        sum += v;
        sum2 += v * v;
    }
    let mean = sum / n as f64;
    let var = sum2 / n as f64 - mean * mean;
    (mean, (var / n as f64).sqrt())
}

#[test]
fn measure_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for dim in [2, 3] {
        for _ in 0..5 {
            let eps = rng.gen_range(0.2..0.6);
            let r = eps + rng.gen_range(0.3..1.5);
            let alpha = rng.gen_range(0.1..0.9);
            let s = rng.gen_range(0.55..0.95);
            let axis = unit(&(0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>());
            let spec = PrismSpec::new(eps, r, alpha, axis).unwrap();
            let exact = prism_measure(&spec, s).unwrap();
            let (mc, se) = mc_measure(&spec, s, 1_000_000, &mut rng);
            assert!((mc - exact).abs() <= 3.0 * se, "N {dim}: {mc} ± {se} vs {exact}");
        }
    }
}

#[test]
fn measure_limits() {
    let s = 0.7;
    let far = prism_measure(&PrismSpec::new(0.3, 1e8, 0.4, vec![1.0, 0.0]).unwrap(), s).unwrap();
    let lim = frac_constant_nd(2, s).unwrap() * cap_area(2, 0.4).unwrap() * 0.3f64.powf(-2.0 * s) / (2.0 * s);
    assert!((far - lim).abs() < 1e-9 * lim);
    // wide openings fill the half space
    let half = prism_measure(&PrismSpec::new(0.3, 2.0, 0.99, vec![0.0, 1.0]).unwrap(), s).unwrap();
    let full = frac_constant_nd(2, s).unwrap() * 2.0 * std::f64::consts::PI * (0.3f64.powf(-2.0 * s) - 2f64.powf(-2.0 * s)) / (2.0 * s);
    assert!((half - 0.5 * full).abs() < 1e-12 * full);
}

#[test]
fn constants_are_reproduced() {
    let k = TestFunction::constant(-1.7);
    for axis in [vec![1.0], vec![0.6, 0.8], vec![0.0, 0.6, 0.8]] {
        let x = vec![0.1; axis.len()];
        let spec = PrismSpec::new(0.2, 3.0, 0.35, axis).unwrap();
        let v = prism_average(&k, &x, &spec, 0.8, &PrismQuad::default()).unwrap();
        assert!((v + 1.7).abs() < 1e-10);
    }
    let v = average_prism_o(&k, &[0.1, 0.2], 0.2, 3.0, 0.35, 0.8, &PrismQuad::default(), &Default::default()).unwrap();
    assert!((v.value + 1.7).abs() < 1e-10);
}

#[test]
fn radial_profile_reduces_to_radial_average() {
    // φ(x + z) = exp(-|z|²) does not see the cap, only the radius
    let x = vec![0.4, -0.2];
    let g = TestFunction::gaussian(x.clone(), 0.5);
    for (s, eps, r) in [(0.6, 0.1, 2.0), (0.9, 0.3, 1.2)] {
        let spec = PrismSpec::new(eps, r, 0.3, vec![0.0, 1.0]).unwrap();
        let got = prism_average(&g, &x, &spec, s, &PrismQuad::default()).unwrap();
        let num = graded_gauss5(|t| (-t * t).exp() * t.powf(-1.0 - 2.0 * s), eps, r, 400);
        let den = (eps.powf(-2.0 * s) - r.powf(-2.0 * s)) / (2.0 * s);
        assert!((got - num / den).abs() < 1e-11, "{got} vs {}", num / den);
    }
}

#[test]
fn rotating_function_and_axis_together() {
    let c = vec![0.5, 0.3];
    let axis = unit(&[0.3, 1.0]);
    let x = vec![-0.2, 0.1];
    let base = prism_average(&TestFunction::gaussian(c.clone(), 0.5), &x, &PrismSpec::new(0.2, 2.0, 0.4, axis.clone()).unwrap(), 0.7, &PrismQuad::default()).unwrap();
    for th in [0.4, 2.0, -1.3] {
        let rc = rotate2(&c, th);
        let rx = rotate2(&x, th);
        let ry = rotate2(&axis, th);
        let v = prism_average(&TestFunction::gaussian(rc, 0.5), &rx, &PrismSpec::new(0.2, 2.0, 0.4, ry).unwrap(), 0.7, &PrismQuad::default()).unwrap();
        assert!((v - base).abs() < 1e-12);
    }
}

#[test]
fn prism_and_line_averages_obey_the_aperture_bound() {
    for spec in ["cosine:xi=1,0", "gaussian", "cutquad", "cutquad:kind=identity"] {
        let phi = parse_entry(spec).unwrap();
        let x = phi.point[..2].to_vec();
        let eta = phi.eta(&x);
        let s = 0.75;
        let eps = eta / 4.0;
        let b = BoundInputs::from_entry(&phi, &x, s, eps).unwrap();
        for (r, alpha) in [(2.0, 0.3), (4.0, 0.05)] {
            let bound = lemma51_bound(&b, r, alpha).unwrap();
            for k in 0..8 {
                let y = rotate2(&[1.0, 0.0], 0.3 + k as f64 * std::f64::consts::PI / 4.0);
                let pv = prism_average_detail(&phi, &x, &PrismSpec::new(eps, r, alpha, y.clone()).unwrap(), s, &PrismQuad::default()).unwrap();
                let lv = line_average(&phi, &x, &y, s, eps, &Default::default()).unwrap();
                let dev = (pv.value - lv).abs();
                assert!(dev <= bound + 10.0 * pv.error + 1e-10, "{spec} R {r} α {alpha}: {dev:e} > {bound:e}");
            }
        }
    }
}

#[test]
fn discrete_sum_matches_naive_reference_bit_for_bit() {
    for (entry, x) in [("gaussian", vec![0.3, 0.1]), ("tent", vec![0.5, -0.3]), ("cosine:xi=0.8,-0.6", vec![1.1, 0.4])] {
        let phi = parse_entry(entry).unwrap();
        let grid = GridSpec { h: 0.5 / 4.0, n_directions: 16 };
        let fast = average_discrete(&phi, &x, 0.5, 2.0, 0.4, 0.75, &grid).unwrap();
        let naive = average_discrete_naive(&phi, &x, 0.5, 2.0, 0.4, 0.75, &grid).unwrap();
        assert_eq!(fast.value.to_bits(), naive.value.to_bits(), "{entry}");
        assert_eq!(fast.sums.len(), naive.sums.len());
        for (a, b) in fast.sums.iter().zip(&naive.sums) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
    let phi = parse_entry("gaussian").unwrap();
    let grid = GridSpec { h: 0.1, n_directions: 5 };
    let fast = average_discrete(&phi, &[0.2, 0.2, 0.1], 0.3, 0.8, 0.5, 0.6, &grid).unwrap();
    let naive = average_discrete_naive(&phi, &[0.2, 0.2, 0.1], 0.3, 0.8, 0.5, 0.6, &grid).unwrap();
    assert_eq!(fast.value.to_bits(), naive.value.to_bits());
}

#[test]
fn symmetric_data_gives_matching_extremes() {
    // φ radial about x_k and antipodal directions: every direction sees the same sum
    let x = vec![0.0, 0.0];
    let g = TestFunction::gaussian(x.clone(), 0.5);
    let d = average_discrete(&g, &x, 0.5, 2.0, 0.4, 0.7, &GridSpec { h: 0.05, n_directions: 4 }).unwrap();
    let (hi, lo) = (d.sums[d.argmax], d.sums[d.argmin]);
    assert!((hi - lo).abs() <= 1e-12 * hi.abs());
}

#[test]
fn empty_stencil_is_reported() {
    let k = TestFunction::constant(1.0);
    let err = average_discrete(&k, &[0.0, 0.0], 0.5, 0.55, 0.01, 0.7, &GridSpec { h: 0.3, n_directions: 3 }).unwrap_err();
    assert!(matches!(err, Error::DegenerateStencil { .. }));
    assert!(average_discrete(&k, &[0.0, 0.0], 0.5, 2.0, 0.3, 0.7, &GridSpec { h: 0.6, n_directions: 3 }).is_err());
}

#[test]
fn stencil_csv_lists_every_point() {
    let spec = PrismSpec::new(0.5, 1.0, 0.3, vec![1.0, 0.0]).unwrap();
    let st = prism_stencil(&spec, 0.1, 0.75).unwrap();
    assert!(!st.is_empty());
    let mut buf = Vec::new();
    write_stencil_csv(&mut buf, &st).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), st.len() + 1);
    assert!(text.starts_with("i0,i1,x0,x1,norm,weight"));
}
