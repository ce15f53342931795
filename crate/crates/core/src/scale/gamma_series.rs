use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{EstimateOutcome, Method, ScalePosterior, ETA_FLOOR};
use crate::special::{ln_gamma, sin_pi, SignedLog};
use crate::{Error, Result};

/// Truncation and stability settings for the Gamma series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaSeriesConfig {
    pub cap_xi: usize,
    pub eps1: f64,
    pub tau1: usize,
}

impl Default for GammaSeriesConfig {
    fn default() -> Self {
        GammaSeriesConfig {
            cap_xi: 30,
            eps1: 1e-2,
            tau1: 4,
        }
    }
}

impl GammaSeriesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau1 < 1 || self.tau1 >= self.cap_xi {
            return Err(Error::domain(format!(
                "need 1 <= tau1 < cap_xi, got tau1 = {}, cap_xi = {}",
                self.tau1, self.cap_xi
            )));
        }
        if !(self.eps1 > 0.0) {
            return Err(Error::domain("eps1 must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GsOutcome {
    Converged(EstimateOutcome),
    Diverged,
}

/// Partial sums below this magnitude fail the stability check.
const PARTIAL_SUM_FLOOR_LN: f64 = -690.775_527_898_213_7; // ln(1e-300)

/// Terms `(r1, r2)` of the numerator and denominator series at index `xi`:
/// `r1 = c Gamma(a+1) / b^(a+1)` and `r2 = c Gamma(a) / b^a`, where
/// `a = xi alpha1 + m/2`, `b = eta/2` and
/// `c = (-1)^(xi+1) Gamma(xi alpha1 + 1) sin(xi alpha1 pi) / (pi xi!)`.
pub fn gamma_series_terms(post: &ScalePosterior, xi: usize) -> Result<(SignedLog, SignedLog)> {
    if xi == 0 {
        return Err(Error::domain("series index starts at 1"));
    }
    if post.law.is_degenerate() {
        return Err(Error::Unsupported("the Gamma series requires alpha < 2".into()));
    }
    if !(post.eta > 0.0) {
        return Err(Error::DegenerateEta { eta: post.eta });
    }
    let a1 = post.law.alpha1;
    let x = xi as f64;
    let s = sin_pi(x * a1);
    if s == 0.0 {
        return Ok((SignedLog::ZERO, SignedLog::ZERO));
    }
    let alt: i8 = if xi % 2 == 1 { 1 } else { -1 };
    let sign = alt * s.signum() as i8;
    let ln_c = ln_gamma(x * a1 + 1.0) - ln_gamma(x + 1.0) - PI.ln() + s.abs().ln();
    let a = x * a1 + post.half_m();
    let ln_b = (post.eta / 2.0).ln();
    let r1 = SignedLog::new(sign, ln_c + ln_gamma(a + 1.0) - (a + 1.0) * ln_b);
    let r2 = SignedLog::new(sign, ln_c + ln_gamma(a) - a * ln_b);
    Ok((r1, r2))
}

/// The stability test on one series: with `terms[i]` and `partials[i]` the
/// term and partial sum at index `i + 1`, checks
/// `sum_{xi = xi_bar - tau1}^{xi_bar} |r_xi / S_xi| < eps1`.
///
/// Any partial sum in the window below `1e-300` in magnitude fails the check.
pub fn series_window_converged(terms: &[SignedLog], partials: &[SignedLog], xi_bar: usize, tau1: usize, eps1: f64) -> bool {
    if xi_bar <= tau1 || xi_bar > terms.len() || xi_bar > partials.len() {
        return false;
    }
    let mut total = 0.0;
    for xi in (xi_bar - tau1)..=xi_bar {
        let (r, s) = (terms[xi - 1], partials[xi - 1]);
        if s.is_zero() || s.ln_abs < PARTIAL_SUM_FLOOR_LN {
            return false;
        }
        if !r.is_zero() {
            total += (r.ln_abs - s.ln_abs).exp();
        }
    }
    total < eps1
}

/// Ratio of the two Gamma series, truncated at the first `xi_bar < cap_xi`
/// where both pass the stability test.
///
/// `Diverged` when no such `xi_bar` exists, when `eta` is degenerate, or when
/// a truncated sum is not positive.
pub fn estimate_gs(post: &ScalePosterior, cfg: &GammaSeriesConfig) -> Result<GsOutcome> {
    cfg.validate()?;
    if post.law.is_degenerate() {
        let mut out = EstimateOutcome::point_mass(Method::Gs);
        out.gs_terms_used = Some(0);
        return Ok(GsOutcome::Converged(out));
    }
    if post.eta <= ETA_FLOOR {
        return Ok(GsOutcome::Diverged);
    }
    let cap = cfg.cap_xi;
    let mut t1 = Vec::with_capacity(cap);
    let mut t2 = Vec::with_capacity(cap);
    let mut s1 = Vec::with_capacity(cap);
    let mut s2 = Vec::with_capacity(cap);
    let (mut sum1, mut sum2) = (SignedLog::ZERO, SignedLog::ZERO);
    for xi in 1..cap {
        let (r1, r2) = gamma_series_terms(post, xi)?;
        sum1 = sum1 + r1;
        sum2 = sum2 + r2;
        t1.push(r1);
        t2.push(r2);
        s1.push(sum1);
        s2.push(sum2);
        if series_window_converged(&t1, &s1, xi, cfg.tau1, cfg.eps1)
            && series_window_converged(&t2, &s2, xi, cfg.tau1, cfg.eps1)
        {
            if sum1.sign <= 0 || sum2.sign <= 0 {
                return Ok(GsOutcome::Diverged);
            }
            let value = sum1.div(sum2).to_f64();
            return Ok(match EstimateOutcome::new(value, Method::Gs) {
                Ok(mut out) => {
                    out.gs_terms_used = Some(xi);
                    GsOutcome::Converged(out)
                }
                Err(_) => GsOutcome::Diverged,
            });
        }
    }
    Ok(GsOutcome::Diverged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable::mixing_law;
    use approx::assert_relative_eq;

    fn post(eta: f64, m: usize, alpha: f64) -> ScalePosterior {
        ScalePosterior::new(eta, m, mixing_law(alpha).unwrap()).unwrap()
    }

    #[test]
    fn first_coefficient_at_alpha_one() {
        // c1 = Gamma(3/2) / pi = 1 / (2 sqrt(pi)); with m = 2, b = 1: r2 = c1 Gamma(1.5)
        let p = post(2.0, 2, 1.0);
        let (r1, r2) = gamma_series_terms(&p, 1).unwrap();
        let c1 = 1.0 / (2.0 * PI.sqrt());
        assert_relative_eq!(r2.to_f64(), c1 * PI.sqrt() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(r1.to_f64(), c1 * 1.5 * PI.sqrt() / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn even_terms_vanish_at_alpha_one() {
        let p = post(2.0, 2, 1.0);
        let (r1, r2) = gamma_series_terms(&p, 2).unwrap();
        assert!(r1.is_zero() && r2.is_zero());
    }

    #[test]
    fn term_ratio_is_a_over_b() {
        let p = post(7.0, 3, 0.9);
        for xi in 1..20 {
            let (r1, r2) = gamma_series_terms(&p, xi).unwrap();
            if r2.is_zero() {
                continue;
            }
            let a = xi as f64 * 0.45 + 1.5;
            assert_eq!(r1.sign, r2.sign);
            assert_relative_eq!(r1.div(r2).to_f64(), a / 3.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn sign_pattern() {
        let p = post(5.0, 2, 1.4);
        for xi in 1..25 {
            let (r1, _) = gamma_series_terms(&p, xi).unwrap();
            let alt = if xi % 2 == 1 { 1.0 } else { -1.0 };
            let expected = alt * (xi as f64 * 0.7 * PI).sin();
            if expected.abs() > 1e-12 {
                assert_eq!(f64::from(r1.sign), expected.signum(), "xi = {xi}");
            }
        }
    }

    #[test]
    fn window_test_on_geometric_series() {
        // ratio 1/2: |r/S| at xi is 2^-xi / (1 - 2^-xi); with tau1 = 4 and
        // eps1 = 1e-2 the window sum first drops below eps1 at xi_bar = 12
        let terms: Vec<SignedLog> = (1..=20).map(|k| SignedLog::from_f64(0.5f64.powi(k))).collect();
        let mut partials = Vec::new();
        let mut acc = SignedLog::ZERO;
        for &t in &terms {
            acc = acc + t;
            partials.push(acc);
        }
        let first = (1..=20).find(|&x| series_window_converged(&terms, &partials, x, 4, 1e-2));
        assert_eq!(first, Some(12));
    }

    #[test]
    fn window_rejects_tiny_partial_sums() {
        let terms = vec![SignedLog::new(1, -800.0); 6];
        let partials = terms.clone();
        assert!(!series_window_converged(&terms, &partials, 6, 4, 1e6));
    }

    #[test]
    fn converges_for_heavy_tails_and_large_eta() {
        let out = match estimate_gs(&post(20.0, 2, 0.5), &GammaSeriesConfig::default()).unwrap() {
            GsOutcome::Converged(o) => o,
            GsOutcome::Diverged => panic!("expected convergence"),
        };
        assert!(out.gs_terms_used.unwrap() < 30);
        assert_eq!(out.method_used, Method::Gs);
    }

    #[test]
    fn levy_oracle() {
        // alpha = 1 with eta = 100: E[1/y] = 3 / 100.5
        match estimate_gs(&post(100.0, 2, 1.0), &GammaSeriesConfig::default()).unwrap() {
            GsOutcome::Converged(o) => assert_relative_eq!(o.value, 3.0 / 100.5, max_relative = 1e-3),
            GsOutcome::Diverged => panic!("expected convergence"),
        }
    }

    #[test]
    fn diverges_for_light_tails_and_small_eta() {
        assert_eq!(
            estimate_gs(&post(0.1, 2, 1.85), &GammaSeriesConfig::default()).unwrap(),
            GsOutcome::Diverged
        );
        assert_eq!(
            estimate_gs(&post(0.0, 2, 0.5), &GammaSeriesConfig::default()).unwrap(),
            GsOutcome::Diverged
        );
    }

    #[test]
    fn config_validation() {
        let bad = GammaSeriesConfig {
            cap_xi: 4,
            eps1: 1e-2,
            tau1: 4,
        };
        assert!(bad.validate().is_err());
        assert!(GammaSeriesConfig::default().validate().is_ok());
    }
}
