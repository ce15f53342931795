use std::f64::consts::PI;

use super::MixingLaw;
use crate::quad;
use crate::special::{ln_gamma, sin_pi, SignedLog};

pub(super) const HYBRID_MAX_TERMS: usize = 300;

const SERIES_TAIL_TOL: f64 = 1e-10;
const SERIES_CANCELLATION_LIMIT: f64 = 1e4;
const INTEGRAL_REL_TOL: f64 = 1e-11;

/// Partial sum of the density series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub converged: bool,
    pub terms_used: usize,
}

/// Sums up to `max_terms` terms. With `stop_when_exhausted`, summation ends
/// once the (decreasing) term envelope no longer changes the sum.
pub(super) fn series(law: &MixingLaw, y: f64, max_terms: usize, stop_when_exhausted: bool) -> SeriesSum {
    let a = law.alpha1;
    let ln_y = y.ln();
    // -(1/(pi y)) (-y^-a)^k  =  (-1)^(k+1) y^(-a k) / (pi y)
    let ln_prefactor = -(PI.ln() + ln_y);
    let mut sum = SignedLog::ZERO;
    let mut max_env = f64::NEG_INFINITY;
    let mut prev_env = f64::NEG_INFINITY;
    let mut last_env = f64::NEG_INFINITY;
    let mut used = 0;
    for k in 1..=max_terms {
        let kf = k as f64;
        let ln_env = ln_prefactor + ln_gamma(kf * a + 1.0) - ln_gamma(kf + 1.0) - kf * a * ln_y;
        let s = sin_pi(kf * a);
        let alt = if k % 2 == 1 { 1 } else { -1 };
        let sign = if s == 0.0 { 0 } else { alt * (s.signum() as i8) };
        let term = SignedLog::new(sign, ln_env + s.abs().ln());
        sum = sum + term;
        max_env = max_env.max(ln_env);
        last_env = ln_env;
        used = k;
        if stop_when_exhausted
            && ln_env < prev_env
            && sum.sign > 0
            && ln_env - sum.ln_abs < (1e-18f64).ln()
        {
            break;
        }
        prev_env = ln_env;
    }
    let converged = sum.sign > 0
        && last_env - sum.ln_abs < SERIES_TAIL_TOL.ln()
        && max_env - sum.ln_abs < SERIES_CANCELLATION_LIMIT.ln();
    SeriesSum {
        value: sum.to_f64(),
        converged,
        terms_used: used,
    }
}

/// `ln A(phi)` for the Zolotarev/Kanter function
/// `A(phi) = [sin(a phi)^a sin((1-a) phi)^(1-a) / sin(phi)]^(1/(1-a))`,
/// increasing on `(0, pi)`.
fn ln_kanter(a: f64, phi: f64) -> f64 {
    ln_kanter_at_zero(a) + ln_kanter_excess(a, phi)
}

/// `ln A(phi) - ln A(0)`, accurate as `phi -> 0`; never negative.
fn ln_kanter_excess(a: f64, phi: f64) -> f64 {
    let e = (a * ln_sinc(a * phi) + (1.0 - a) * ln_sinc((1.0 - a) * phi) - ln_sinc(phi)) / (1.0 - a);
    e.max(0.0)
}

/// `ln(sin(z) / z)` for `z` in `[0, pi)`.
fn ln_sinc(z: f64) -> f64 {
    if z < 1e-2 {
        let z2 = z * z;
        -z2 * (1.0 / 6.0 + z2 * (1.0 / 180.0 + z2 / 2835.0))
    } else {
        (z.sin() / z).ln()
    }
}

fn ln_kanter_at_zero(a: f64) -> f64 {
    (a * a.ln() + (1.0 - a) * (1.0 - a).ln()) / (1.0 - a)
}

/// Point where `ln A(phi) == target`, by bisection; `None` if outside `(0, pi)`.
fn solve_kanter(a: f64, target: f64) -> Option<f64> {
    if target <= ln_kanter_at_zero(a) {
        return None;
    }
    let (mut lo, mut hi) = (0.0, PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ln_kanter(a, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Breakpoints on `[0, pi]` that bracket where an integrand built from
/// `u(phi) = A(phi) x` has its mass.
fn breakpoints(a: f64, ln_x: f64) -> Vec<f64> {
    let mut pts = vec![0.0, PI];
    let ln_u_min = ln_kanter_at_zero(a) + ln_x;
    if ln_u_min > 0.0 {
        // mass hugs phi = 0 with width ~ u_min^{-1/2}
        let mut w = (-0.5 * ln_u_min).exp() / 16.0;
        while w < PI {
            pts.push(w);
            w *= 2.0;
        }
    }
    if let Some(peak) = solve_kanter(a, -ln_x) {
        pts.push(peak);
        let d = PI - peak;
        let mut step = d;
        while peak - step > 0.0 {
            pts.push(peak - step);
            step *= 4.0;
        }
        let mut step = d / 4.0;
        for _ in 0..4 {
            pts.push(peak + step);
            step /= 4.0;
        }
    }
    pts.retain(|p| (0.0..=PI).contains(p));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn integrate_pieces<F: Fn(f64) -> f64>(f: F, pts: &[f64]) -> f64 {
    pts.windows(2)
        .map(|w| quad::integrate(&f, w[0], w[1], INTEGRAL_REL_TOL, 0.0).value)
        .sum()
}

/// `f(y) = a / ((1-a) pi y) * int_0^pi u e^{-u} dphi` with `u = A(phi) y^{-a/(1-a)}`.
pub(super) fn ln_pdf_integral(law: &MixingLaw, y: f64) -> f64 {
    let a = law.alpha1;
    let ln_x = -a / (1.0 - a) * y.ln();
    let ln_u_min = ln_kanter_at_zero(a) + ln_x;
    let pts = breakpoints(a, ln_x);
    let ln_front = (a / ((1.0 - a) * PI)).ln() - y.ln();
    if ln_u_min > 0.0 {
        // factor out u_min e^{-u_min}
        let u_min = ln_u_min.exp();
        if !u_min.is_finite() {
            return f64::NEG_INFINITY;
        }
        let inner = integrate_pieces(
            |phi| {
                let ln_ratio = ln_kanter_excess(a, phi);
                (ln_ratio - u_min * ln_ratio.exp_m1()).exp()
            },
            &pts,
        );
        ln_front + ln_u_min - u_min + inner.ln()
    } else {
        let inner = integrate_pieces(
            |phi| {
                let u = (ln_kanter(a, phi) + ln_x).exp();
                u * (-u).exp()
            },
            &pts,
        );
        ln_front + inner.ln()
    }
}

/// `F(y) = (1/pi) int_0^pi exp(-A(phi) y^{-a/(1-a)}) dphi`.
pub(super) fn cdf_integral(law: &MixingLaw, y: f64) -> f64 {
    let a = law.alpha1;
    let ln_x = -a / (1.0 - a) * y.ln();
    let pts = breakpoints(a, ln_x);
    let v = integrate_pieces(|phi| (-(ln_kanter(a, phi) + ln_x).exp()).exp(), &pts);
    (v / PI).clamp(0.0, 1.0)
}
