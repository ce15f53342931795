//! The totally skewed positive stable law that mixes the sub-Gaussian
//! alpha-stable (SGαS) distribution.
//!
//! An SGαS vector is `sqrt(Y) * G` with `G` Gaussian and `Y` drawn from the
//! mixing law `S(y; alpha/2, 1, gamma_mix, 0)`. The scale is chosen so that
//! `E[exp(-s Y)] = exp(-s^(alpha/2))`.

mod density;
pub mod diagnostics;

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use density::SeriesSum;

/// Parameters of a univariate stable law in the `S1` parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableLaw {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl StableLaw {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::domain(format!("stable alpha must lie in (0, 2], got {alpha}")));
        }
        if !(-1.0..=1.0).contains(&beta) {
            return Err(Error::domain(format!("stable beta must lie in [-1, 1], got {beta}")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::domain(format!("stable gamma must be positive, got {gamma}")));
        }
        if !delta.is_finite() {
            return Err(Error::domain("stable delta must be finite"));
        }
        Ok(StableLaw {
            alpha,
            beta,
            gamma,
            delta,
        })
    }
}

/// Mixing law of an SGαS distribution with stability exponent `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingLaw {
    /// SGαS stability exponent in `(0, 2]`.
    pub alpha: f64,
    /// Exponent of the positive stable law, `alpha / 2`.
    pub alpha1: f64,
    /// Scale `cos(pi alpha / 4)^(2 / alpha)`; equal to 1 at `alpha == 2`.
    pub gamma_mix: f64,
}

/// Builds the mixing law for an SGαS exponent.
pub fn mixing_law(alpha: f64) -> Result<MixingLaw> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain(format!("SGaS alpha must lie in (0, 2], got {alpha}")));
    }
    let alpha1 = alpha / 2.0;
    let gamma_mix = if alpha == 2.0 {
        1.0
    } else {
        (PI * alpha / 4.0).cos().powf(2.0 / alpha)
    };
    Ok(MixingLaw {
        alpha,
        alpha1,
        gamma_mix,
    })
}

impl MixingLaw {
    /// `alpha == 2`: the law is the point mass at 1.
    pub fn is_degenerate(&self) -> bool {
        self.alpha == 2.0
    }

    pub fn as_stable_law(&self) -> StableLaw {
        StableLaw {
            alpha: self.alpha1,
            beta: 1.0,
            gamma: self.gamma_mix,
            delta: 0.0,
        }
    }

    /// `E[exp(-s Y)]`.
    pub fn laplace_transform(&self, s: f64) -> f64 {
        (-s.powf(self.alpha1)).exp()
    }

    /// One draw of `ln Y` by the Chambers–Mallows–Stuck transform with
    /// `beta = 1`.
    pub fn sample_ln<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_degenerate() {
            return 0.0;
        }
        let a = self.alpha1;
        let zeta = -(PI * a / 2.0).tan();
        let xi = (-zeta).atan() / a;
        let ln_scale = self.gamma_mix.ln() + (1.0 + zeta * zeta).ln() / (2.0 * a);
        loop {
            let u: f64 = rng.random();
            if u == 0.0 {
                continue;
            }
            let v = PI * (u - 0.5);
            let w: f64 = Exp1.sample(rng);
            let ln_y = ln_scale + (a * (v + xi)).sin().ln() - v.cos().ln() / a
                + (1.0 - a) / a * ((v - a * (v + xi)).cos().ln() - w.ln());
            if ln_y.is_finite() {
                return ln_y;
            }
        }
    }

    /// One draw of `Y`, finite and strictly positive.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let y = self.sample_ln(rng).exp();
            if y > 0.0 && y.is_finite() {
                return y;
            }
        }
    }

    /// Density at `y > 0` (`alpha < 2`).
    pub fn pdf(&self, y: f64) -> Result<f64> {
        self.ln_pdf(y).map(f64::exp)
    }

    /// Log-density at `y > 0` (`alpha < 2`).
    ///
    /// The convergent series is used where it is numerically safe; elsewhere
    /// the Zolotarev integral representation is integrated adaptively.
    pub fn ln_pdf(&self, y: f64) -> Result<f64> {
        self.check_density_args(y)?;
        let series = density::series(self, y, density::HYBRID_MAX_TERMS, true);
        if series.converged {
            Ok(series.value.ln())
        } else {
            Ok(density::ln_pdf_integral(self, y))
        }
    }

    /// Log-density by the integral representation alone.
    pub fn ln_pdf_integral(&self, y: f64) -> Result<f64> {
        self.check_density_args(y)?;
        Ok(density::ln_pdf_integral(self, y))
    }

    /// `P(Y <= y)` from the integral representation.
    pub fn cdf(&self, y: f64) -> Result<f64> {
        if self.is_degenerate() {
            return Ok(if y >= 1.0 { 1.0 } else { 0.0 });
        }
        if y <= 0.0 {
            return Ok(0.0);
        }
        Ok(density::cdf_integral(self, y))
    }

    fn check_density_args(&self, y: f64) -> Result<()> {
        if self.is_degenerate() {
            return Err(Error::Unsupported(
                "the alpha = 2 mixing law is a point mass and has no density".into(),
            ));
        }
        if !(y > 0.0) {
            return Err(Error::domain(format!("density argument must be positive, got {y}")));
        }
        Ok(())
    }
}

/// `count` i.i.d. draws from the mixing law.
pub fn sample_positive_stable<R: Rng + ?Sized>(law: &MixingLaw, count: usize, rng: &mut R) -> Vec<f64> {
    (0..count).map(|_| law.sample(rng)).collect()
}

/// Density of the mixing law at `y`.
pub fn positive_stable_pdf(law: &MixingLaw, y: f64) -> Result<f64> {
    law.pdf(y)
}

/// Log-density of the mixing law at `y`.
pub fn positive_stable_ln_pdf(law: &MixingLaw, y: f64) -> Result<f64> {
    law.ln_pdf(y)
}

/// First `terms` terms of the series
/// `S(y) = -(1/(pi y)) sum_k Gamma(k a + 1)/k! (-y^-a)^k sin(k a pi)`.
///
/// `converged` is set when the envelope of the last term is below `1e-10`
/// of the partial sum, the partial sum is positive, and no intermediate term
/// exceeded the sum by more than `1e4` (beyond that, cancellation has eaten
/// the digits the test relies on).
pub fn pdf_series_partial(law: &MixingLaw, y: f64, terms: usize) -> Result<SeriesSum> {
    if law.alpha1 >= 1.0 {
        return Err(Error::Unsupported("the series requires alpha < 2".into()));
    }
    if !(y > 0.0) {
        return Err(Error::domain(format!("series argument must be positive, got {y}")));
    }
    if terms == 0 {
        return Err(Error::domain("series needs at least one term"));
    }
    Ok(density::series(law, y, terms, false))
}
