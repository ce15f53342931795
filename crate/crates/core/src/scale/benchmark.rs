//! Posterior means `E[y]` of the mixing variable for Gaussian scale
//! mixtures whose likelihood is `N(z; Hx, R / y)`.

use super::ETA_FLOOR;
use crate::quad;
use crate::special::{ln_bessel_k, lower_gamma_mean_ratio};

/// Student's t: the posterior is `Gamma((m+v)/2, (eta+v)/2)`.
pub fn student_t_scale_mean(eta: f64, m: usize, v: f64) -> f64 {
    (m as f64 + v) / (eta + v)
}

/// Slash: `gamma_lower(a+1, b) / (b gamma_lower(a, b))` with `a = (m+v)/2`
/// and `b = eta/2`; `a / (a+1)` at `eta == 0`.
pub fn slash_scale_mean(eta: f64, m: usize, v: f64) -> f64 {
    lower_gamma_mean_ratio((m as f64 + v) / 2.0, eta.max(0.0) / 2.0)
}

/// Variance-Gamma: the posterior is generalized inverse Gaussian with index
/// `(m-v)/2` and density `∝ y^(p-1) exp(-(eta y + v / y) / 2)`.
///
/// `eta` is clamped to [`ETA_FLOOR`]; below it, and wherever the Bessel
/// ratio is not finite, the mean comes from quadrature.
pub fn vg_scale_mean(eta: f64, m: usize, v: f64) -> f64 {
    let p = (m as f64 - v) / 2.0;
    let eta_eff = eta.max(ETA_FLOOR);
    if eta >= ETA_FLOOR {
        let x = (v * eta_eff).sqrt();
        let ln_mean = 0.5 * (v / eta_eff).ln() + ln_bessel_k(p + 1.0, x) - ln_bessel_k(p, x);
        let mean = ln_mean.exp();
        if mean.is_finite() && mean > 0.0 {
            return mean;
        }
    }
    gig_mean_by_quadrature(p, eta_eff, v)
}

/// `E[y]` for the density `∝ y^(p-1) exp(-(a y + b / y) / 2)`, integrating
/// in `t = ln y` around the mode of each integrand.
fn gig_mean_by_quadrature(p: f64, a: f64, b: f64) -> f64 {
    (ln_moment(p + 1.0, a, b) - ln_moment(p, a, b)).exp()
}

/// `ln int_0^inf y^(q-1) exp(-(a y + b / y) / 2) dy`.
fn ln_moment(q: f64, a: f64, b: f64) -> f64 {
    let h = |t: f64| q * t - 0.5 * (a * t.exp() + b * (-t).exp());
    // stationary point of h: a y^2 - 2 q y - b = 0
    let y_star = (q + (q * q + a * b).sqrt()) / a;
    let t_star = y_star.ln();
    let h_star = h(t_star);
    let mut lo = 1.0;
    while h(t_star - lo) - h_star > -60.0 {
        lo *= 2.0;
    }
    let mut hi = 1.0;
    while h(t_star + hi) - h_star > -60.0 {
        hi *= 2.0;
    }
    let g = |t: f64| (h(t) - h_star).exp();
    let left = quad::integrate(g, t_star - lo, t_star, 1e-13, 0.0).value;
    let right = quad::integrate(g, t_star, t_star + hi, 1e-13, 0.0).value;
    h_star + (left + right).ln()
}
