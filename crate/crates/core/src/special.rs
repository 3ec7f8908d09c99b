//! Gamma function via the Lanczos approximation (g = 7, 9 coefficients).

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real arguments; uses reflection below 1/2.
///
/// Returns NaN at the poles (non-positive integers).
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_factorials() {
        let mut fact = 1.0;
        for n in 1..15 {
            assert!((gamma(n as f64) - fact).abs() <= 1e-13 * fact, "n = {n}");
            fact *= n as f64;
        }
    }

    #[test]
    fn half_integers() {
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(1.5) - 0.5 * PI.sqrt()).abs() < 1e-14);
        assert!((gamma(-0.5) + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn recurrence_holds() {
        for k in 0..50 {
            let x = 0.05 + 0.07 * k as f64;
            let lhs = gamma(x + 1.0);
            let rhs = x * gamma(x);
            assert!((lhs - rhs).abs() <= 2e-14 * lhs.abs(), "x = {x}");
        }
    }

    #[test]
    fn poles_are_nan() {
        assert!(gamma(0.0).is_nan());
        assert!(gamma(-2.0).is_nan());
    }
}
