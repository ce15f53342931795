//! Special functions and signed-log arithmetic used by the estimators.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg};

use crate::quad;

pub use statrs::function::gamma::ln_gamma;

/// A real number stored as `sign * exp(ln_abs)`.
///
/// Zero is represented by `sign == 0` and `ln_abs == -inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub ln_abs: f64,
    pub sign: i8,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        ln_abs: f64::NEG_INFINITY,
        sign: 0,
    };

    pub fn new(sign: i8, ln_abs: f64) -> Self {
        if sign == 0 || ln_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            SignedLog {
                ln_abs,
                sign: sign.signum(),
            }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            SignedLog::new(if x > 0.0 { 1 } else { -1 }, x.abs().ln())
        }
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.ln_abs.exp(),
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn abs(self) -> Self {
        SignedLog::new(self.sign.abs(), self.ln_abs)
    }

    /// `self / other`; division by zero yields `+inf` magnitude with the
    /// numerator's sign.
    pub fn div(self, other: SignedLog) -> Self {
        if self.is_zero() {
            return Self::ZERO;
        }
        if other.is_zero() {
            return SignedLog::new(self.sign, f64::INFINITY);
        }
        SignedLog::new(self.sign * other.sign, self.ln_abs - other.ln_abs)
    }
}

impl Add for SignedLog {
    type Output = SignedLog;

    fn add(self, rhs: SignedLog) -> SignedLog {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.ln_abs >= rhs.ln_abs {
            (self, rhs)
        } else {
            (rhs, self)
        };
        if big.ln_abs == f64::INFINITY {
            return big;
        }
        let d = (small.ln_abs - big.ln_abs).exp();
        if big.sign == small.sign {
            SignedLog::new(big.sign, big.ln_abs + d.ln_1p())
        } else if d == 1.0 {
            SignedLog::ZERO
        } else {
            SignedLog::new(big.sign, big.ln_abs + (-d).ln_1p())
        }
    }
}

impl Mul for SignedLog {
    type Output = SignedLog;

    fn mul(self, rhs: SignedLog) -> SignedLog {
        SignedLog::new(self.sign * rhs.sign, self.ln_abs + rhs.ln_abs)
    }
}

impl Neg for SignedLog {
    type Output = SignedLog;

    fn neg(self) -> SignedLog {
        SignedLog::new(-self.sign, self.ln_abs)
    }
}

/// `ln(sum(exp(xs)))`, returning `-inf` for an empty or all-`-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `sin(pi * t)` with exact zeros at integer `t`.
pub fn sin_pi(t: f64) -> f64 {
    let r = t - 2.0 * (t / 2.0).floor();
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    if r < 0.5 {
        (PI * r).sin()
    } else if r <= 1.5 {
        (PI * (1.0 - r)).sin()
    } else {
        -(PI * (2.0 - r)).sin()
    }
}

/// `gamma_lower(a + 1, b) / (b * gamma_lower(a, b))`, the mean of a Gamma(a, b)
/// law truncated to `(0, 1)`.
///
/// At `b == 0` the analytic limit `a / (a + 1)` is returned.
pub fn lower_gamma_mean_ratio(a: f64, b: f64) -> f64 {
    assert!(a > 0.0 && b >= 0.0, "lower_gamma_mean_ratio: a > 0, b >= 0");
    if b == 0.0 {
        return a / (a + 1.0);
    }
    if b < a + 40.0 {
        // gamma_lower(s, b) = b^s e^{-b} sum_k b^k / (s (s+1) ... (s+k)); the
        // prefactors cancel in the ratio.
        let num = lower_gamma_kummer_sum(a + 1.0, b);
        let den = lower_gamma_kummer_sum(a, b);
        num / den
    } else {
        let p1 = statrs::function::gamma::gamma_lr(a + 1.0, b);
        let p0 = statrs::function::gamma::gamma_lr(a, b);
        a * p1 / (b * p0)
    }
}

fn lower_gamma_kummer_sum(s: f64, b: f64) -> f64 {
    let mut term = 1.0 / s;
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= b / (s + k);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
        k += 1.0;
        if k > 10_000.0 {
            break;
        }
    }
    sum
}

/// `ln K_nu(x)` for real order and `x > 0`.
///
/// Uses `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt`, with the
/// exponent shifted by its maximum so neither large orders nor large
/// arguments overflow.
pub fn ln_bessel_k(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0, "ln_bessel_k requires x > 0");
    let nu = nu.abs();
    let t_star = (nu / x).asinh();
    let h_star = -x * t_star.cosh() + nu * t_star;
    // h(t) - h(t*) without cancellation: cosh t - cosh t* = 2 sinh((t+t*)/2) sinh((t-t*)/2)
    let h_shift = |t: f64| -2.0 * x * (0.5 * (t + t_star)).sinh() * (0.5 * (t - t_star)).sinh() + nu * (t - t_star);
    let integrand = |t: f64| {
        let e = h_shift(t).exp();
        // cosh(nu t) = e^{nu t} (1 + e^{-2 nu t}) / 2
        e * 0.5 * (1.0 + (-2.0 * nu * t).exp())
    };
    // Upper limit where the shifted exponent has dropped below -60.
    let mut upper = t_star + 1.0;
    while h_shift(upper) > -60.0 {
        upper = t_star + 2.0 * (upper - t_star);
    }
    let mut total = 0.0;
    if t_star > 0.0 {
        total += quad::integrate(integrand, 0.0, t_star, 1e-13, 0.0).value;
    }
    total += quad::integrate(integrand, t_star, upper, 1e-13, 0.0).value;
    h_star + total.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn signed_log_add_cancels() {
        let a = SignedLog::from_f64(3.5);
        let b = SignedLog::from_f64(-3.5);
        assert!((a + b).is_zero());
        assert_relative_eq!((a + SignedLog::from_f64(-1.5)).to_f64(), 2.0, epsilon = 1e-14);
        assert_relative_eq!((a * b).to_f64(), -12.25, epsilon = 1e-12);
    }

    #[test]
    fn sin_pi_is_exact_at_integers() {
        assert_eq!(sin_pi(1.0), 0.0);
        assert_eq!(sin_pi(2.0), 0.0);
        assert_eq!(sin_pi(-3.0), 0.0);
        assert_relative_eq!(sin_pi(0.5), 1.0);
        assert_relative_eq!(sin_pi(1.5), -1.0);
        assert_relative_eq!(sin_pi(0.3), (0.3 * PI).sin(), epsilon = 1e-15);
        assert_relative_eq!(sin_pi(1.7), (1.7 * PI).sin(), epsilon = 1e-15);
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_relative_eq!(log_sum_exp(&[1000.0, 1000.0]), 1000.0 + 2f64.ln());
        assert_relative_eq!(log_sum_exp(&[-1000.0, f64::NEG_INFINITY]), -1000.0);
    }

    #[test]
    fn bessel_k_matches_closed_forms() {
        // K_{1/2}(x) = sqrt(pi / (2x)) e^{-x}
        for &x in &[0.01, 0.5, 1.0, 7.0, 300.0] {
            let exact = (PI / (2.0 * x)).sqrt().ln() - x;
            assert_relative_eq!(ln_bessel_k(0.5, x), exact, max_relative = 1e-11, epsilon = 1e-11);
        }
        // K_{3/2}(x) = sqrt(pi / (2x)) e^{-x} (1 + 1/x)
        let x = 2.5;
        let exact = ((PI / (2.0 * x)).sqrt() * (-x).exp() * (1.0 + 1.0 / x)).ln();
        assert_relative_eq!(ln_bessel_k(-1.5, x), exact, max_relative = 1e-11);
    }

    #[test]
    fn bessel_k_reference_values() {
        // A&S Table 9.8: K0(1) = 0.4210244382, K1(1) = 0.6019072302
        assert_relative_eq!(ln_bessel_k(0.0, 1.0).exp(), 0.421_024_438_240_708_3, max_relative = 1e-11);
        assert_relative_eq!(ln_bessel_k(1.0, 1.0).exp(), 0.601_907_230_197_234_6, max_relative = 1e-11);
    }

    #[test]
    fn lower_gamma_ratio_limits() {
        assert_relative_eq!(lower_gamma_mean_ratio(2.0, 0.0), 2.0 / 3.0);
        assert_relative_eq!(lower_gamma_mean_ratio(2.0, 1e-9), 2.0 / 3.0, max_relative = 1e-8);
        assert_relative_eq!(lower_gamma_mean_ratio(2.0, 5e5), 4e-6, max_relative = 1e-12);
        // integer a: gamma_lower(1, b) = 1 - e^{-b}, gamma_lower(2, b) = 1 - e^{-b}(1 + b)
        let b: f64 = 3.0;
        let exact = (1.0 - (-b).exp() * (1.0 + b)) / (b * (1.0 - (-b).exp()));
        assert_relative_eq!(lower_gamma_mean_ratio(1.0, b), exact, max_relative = 1e-14);
        // both branches agree at the switch point
        let a = 1.5;
        let series = lower_gamma_kummer_sum(a + 1.0, a + 39.0) / lower_gamma_kummer_sum(a, a + 39.0);
        let cf = a * statrs::function::gamma::gamma_lr(a + 1.0, a + 39.0)
            / ((a + 39.0) * statrs::function::gamma::gamma_lr(a, a + 39.0));
        assert_relative_eq!(series, cf, max_relative = 1e-12);
    }
}
