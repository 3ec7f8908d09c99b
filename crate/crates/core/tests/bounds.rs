use fraclap::bounds::*;
use fraclap::corelap::{eps_parts, lap_frac, lap_inf_local, EvalOpts};
use fraclap::fracmeasure::small_constant;
use fraclap::sphereopt::ball_extrema;
use fraclap::testfuncs::{catalog, parse_entry};
use proptest::prelude::*;

#[test]
fn measured_deviations_stay_below_bounds() {
    let opts = EvalOpts::default();
    for phi in catalog() {
        let x = phi.point.clone();
        let eta = phi.eta(&x);
        for s in [0.6, 0.85] {
            let lap = lap_frac(&phi, &x, s, &opts).unwrap();
            let cs = small_constant(s).unwrap();
            for eps in [eta / 4.0, eta / 16.0] {
                let b = BoundInputs::from_entry(&phi, &x, s, eps).unwrap();
                let parts = eps_parts(&phi, &x, s, eps, &opts).unwrap();
                let slack = 10.0 * (parts.quad_error / parts.mass + lap.diagnostics.quad_error) + 1e-12;

                let lhs = (parts.average() - parts.phi_x - eps.powf(2.0 * s) * lap.value / (cs * (1.0 - s))).abs();
                let rhs = thm1_bound(&b).unwrap();
                assert!(lhs <= rhs + slack, "{} s {s} eps {eps}: {lhs:e} > {rhs:e}", phi.name);

                let lhs = (parts.lap() - lap.value).abs();
                let rhs = truncation_bound(&b).unwrap();
                assert!(lhs <= rhs + 10.0 * (parts.quad_error + lap.diagnostics.quad_error) + 1e-12, "{} trunc s {s} eps {eps}: {lhs:e} > {rhs:e}", phi.name);
            }
        }
    }
}

#[test]
fn local_midpoint_bound_holds() {
    for (spec, x) in [("gaussian", vec![0.3, 0.2]), ("cutquad", vec![0.2, -0.1]), ("cosine:xi=0.8,-0.6", vec![1.1, 0.4])] {
        let phi = parse_entry(spec).unwrap();
        let d = lap_inf_local(&phi, &x).unwrap();
        for eps in [0.1, 0.03] {
            let b = BoundInputs::from_entry(&phi, &x, 0.75, eps).unwrap();
            let ext = ball_extrema(&phi, &x, eps, &Default::default()).unwrap();
            let lhs = (ext.sup + ext.inf - 2.0 * phi.eval(&x) - eps * eps * d).abs();
            assert!(lhs <= otto_bound(&b).unwrap() + 1e-12, "{spec} eps {eps}");
        }
    }
}

fn arb_inputs() -> impl Strategy<Value = BoundInputs> {
    (0.52f64..0.98, 0.01f64..0.2, 0.3f64..1.0, 0.0f64..3.0, 0.05f64..2.0, 0.1f64..3.0, 0.1f64..3.0).prop_map(
        |(s, e, eta, c, p, sup, lip)| BoundInputs {
            s,
            eps: e * eta,
            eta,
            c_x: c,
            p_norm: p,
            sup_norm: sup,
            modulus: fraclap::testfuncs::Modulus::Lipschitz(lip),
            lipschitz: Some(lip),
            holder: None,
            hess_norm: 0.0,
            hess_osc: 0.0,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bounds_are_nonnegative_and_monotone(b in arb_inputs(), dc in 0.0f64..1.0, ds in 0.0f64..1.0, dl in 0.0f64..1.0) {
        let bigger = BoundInputs {
            c_x: b.c_x + dc,
            sup_norm: b.sup_norm + ds,
            lipschitz: b.lipschitz.map(|l| l + dl),
            modulus: fraclap::testfuncs::Modulus::Lipschitz(b.lipschitz.unwrap() + dl),
            ..b.clone()
        };
        let tol = |v: f64| 1e-9 * v.abs().max(1.0);
        let t1 = thm1_bound(&b).unwrap();
        prop_assert!(t1 >= 0.0);
        prop_assert!(thm1_bound(&bigger).unwrap() >= t1 - tol(t1));
        let c = cor32_bound(&b).unwrap();
        prop_assert!(c >= 0.0 && cor32_bound(&bigger).unwrap() >= c - tol(c));
        let l = lemma51_bound(&b, 2.0, 0.1).unwrap();
        prop_assert!(l >= 0.0 && lemma51_bound(&bigger, 2.0, 0.1).unwrap() >= l - tol(l));
        let k = kappa_eps(&b).unwrap();
        prop_assert!((0.0..=2.0).contains(&k));
        if k < 2.0 {
            prop_assert!(kappa_feasible(&b, (k - KAPPA_TOL).max(0.0)));
            prop_assert!(!kappa_feasible(&b, k + KAPPA_TOL));
        }
    }
}
