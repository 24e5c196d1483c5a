//! Gamma-function family and a few trigonometric helpers.
//!
//! The Lanczos approximation (g = 7, nine coefficients) gives close to full
//! double precision for positive arguments; negative arguments go through
//! the reflection formula.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

fn lanczos_sum(x: f64) -> f64 {
    // x has already been shifted down by one
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    acc
}

/// sin(πx) with exact zeros at the integers and exact ±1 at half-integers.
pub fn sin_pi(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    let mut r = x.rem_euclid(2.0);
    let mut sign = 1.0;
    if r >= 1.0 {
        r -= 1.0;
        sign = -1.0;
    }
    if r == 0.0 {
        return 0.0;
    }
    if r > 0.5 {
        r = 1.0 - r;
    }
    sign * (PI * r).sin()
}

/// cos(πx), exact at the integers and zero at half-integers.
pub fn cos_pi(x: f64) -> f64 {
    sin_pi(x + 0.5)
}

/// Euler's Gamma function for real arguments.
///
/// Returns `NaN` at the poles (non-positive integers) and `inf` on overflow.
pub fn gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / (sin_pi(x) * gamma(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    if x == x.floor() && x <= 23.0 {
        // small factorials are exact in double precision
        let mut acc = 1.0;
        let mut k = 2.0;
        while k < x {
            acc *= k;
            k += 1.0;
        }
        return acc;
    }
    let y = x - 1.0;
    let t = y + LANCZOS_G + 0.5;
    // split the power so t^{y+1/2} cannot overflow before e^{-t} is applied
    let half = t.powf(0.5 * (y + 0.5));
    (2.0 * PI).sqrt() * half * ((-t).exp() * half) * lanczos_sum(y)
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x <= 0.0 || x.is_nan() {
        return f64::NAN;
    }
    if x < 0.5 {
        // reflection keeps the Lanczos sum in its accurate range
        return (PI / sin_pi(x)).ln() - ln_gamma(1.0 - x);
    }
    if x < 20.0 {
        return gamma(x).ln();
    }
    let y = x - 1.0;
    let t = y + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (y + 0.5) * t.ln() - t + lanczos_sum(y).ln()
}

/// Reciprocal Gamma 1/Γ(x), an entire function: zero at the non-positive
/// integers and finite everywhere except for overflow at very negative x.
pub fn rgamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    if x >= 0.5 {
        if x > 171.0 {
            return (-ln_gamma(x)).exp();
        }
        return 1.0 / gamma(x);
    }
    // 1/Γ(x) = sin(πx) Γ(1-x) / π
    let s = sin_pi(x);
    let one_minus = 1.0 - x;
    if one_minus > 171.0 {
        return s.signum() * (ln_gamma(one_minus) + s.abs().ln() - PI.ln()).exp();
    }
    s * gamma(one_minus) / PI
}

/// ln |1/Γ(x)| together with the sign of 1/Γ(x). At the poles of Γ the
/// logarithm is `-inf` and the sign is zero.
pub fn ln_abs_rgamma(x: f64) -> (f64, f64) {
    if x <= 0.0 && x == x.floor() {
        return (f64::NEG_INFINITY, 0.0);
    }
    if x > 0.0 {
        return (-ln_gamma(x), 1.0);
    }
    let s = sin_pi(x);
    (
        ln_gamma(1.0 - x) + s.abs().ln() - PI.ln(),
        s.signum(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_known_values() {
        assert_relative_eq!(gamma(0.5), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(1.5), 0.5 * PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(5.0), 24.0, max_relative = 1e-15);
        assert_relative_eq!(gamma(0.3), 2.991_568_987_687_590_6, max_relative = 1e-13);
        assert_relative_eq!(gamma(-0.5), -2.0 * PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(10.7), 1_799_844.078_931_372_4, max_relative = 1e-13);
        assert_relative_eq!(gamma(160.5), ln_gamma(160.5).exp(), max_relative = 1e-12);
        assert!(gamma(0.0).is_nan());
        assert!(gamma(-3.0).is_nan());
    }

    #[test]
    fn ln_gamma_matches_gamma_and_stirling() {
        for &x in &[0.1, 0.7, 3.3, 19.9, 20.1, 55.5] {
            assert_relative_eq!(ln_gamma(x), gamma(x).ln(), max_relative = 1e-13);
        }
        // ln Γ(1001) = ln(1000!)
        assert_relative_eq!(ln_gamma(1001.0), 5_912.128_178_488_163, max_relative = 1e-14);
    }

    #[test]
    fn rgamma_zeros_and_reflection() {
        assert_eq!(rgamma(0.0), 0.0);
        assert_eq!(rgamma(-4.0), 0.0);
        assert_relative_eq!(rgamma(-0.5), -1.0 / (2.0 * PI.sqrt()), max_relative = 1e-14);
        assert_relative_eq!(rgamma(3.0), 0.5, max_relative = 1e-15);
        let (ln_abs, sign) = ln_abs_rgamma(-2.5);
        assert_relative_eq!(sign * ln_abs.exp(), rgamma(-2.5), max_relative = 1e-13);
    }

    #[test]
    fn sin_pi_exact_points() {
        assert_eq!(sin_pi(1.0), 0.0);
        assert_eq!(sin_pi(-2.0), 0.0);
        assert_eq!(sin_pi(0.5), 1.0);
        assert_eq!(sin_pi(1.5), -1.0);
        assert_eq!(cos_pi(0.5), 0.0);
        assert_relative_eq!(sin_pi(0.25), std::f64::consts::FRAC_1_SQRT_2, max_relative = 1e-15);
    }
}
