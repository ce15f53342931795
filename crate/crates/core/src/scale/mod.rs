//! Estimators of `E[1/y]` under the SGαS mixing posterior
//! `q'(y) ∝ y^(-m/2) exp(-eta / (2y)) S(y)`, and closed-form scale means for
//! the benchmark Gaussian scale mixtures.

mod benchmark;
mod gamma_series;
mod importance;
mod laguerre;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::stable::MixingLaw;
use crate::{Error, Result};

pub use benchmark::{slash_scale_mean, student_t_scale_mean, vg_scale_mean};
pub use gamma_series::{estimate_gs, gamma_series_terms, series_window_converged, GammaSeriesConfig, GsOutcome};
pub use importance::estimate_is;
pub use laguerre::{estimate_glq, laguerre_rule, LaguerreRule, MAX_LAGUERRE_ORDER};

/// Below this residual statistic the GLQ substitution `y = eta / (2x)` and
/// the Gamma series (`b = eta / 2`) both collapse.
pub const ETA_FLOOR: f64 = 1e-12;

/// The unnormalized posterior over the mixing variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalePosterior {
    pub eta: f64,
    pub m: usize,
    pub law: MixingLaw,
}

impl ScalePosterior {
    pub fn new(eta: f64, m: usize, law: MixingLaw) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::domain(format!("eta must be finite and nonnegative, got {eta}")));
        }
        if m == 0 {
            return Err(Error::domain("measurement dimension must be positive"));
        }
        Ok(ScalePosterior { eta, m, law })
    }

    pub(crate) fn half_m(&self) -> f64 {
        self.m as f64 / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Is,
    Glq,
    Gs,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Is => "is",
            Method::Glq => "glq",
            Method::Gs => "gs",
        }
    }
}

/// A positive, finite estimate of `E[1/y]` and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOutcome {
    pub value: f64,
    pub method_used: Method,
    pub gs_terms_used: Option<usize>,
    /// False when the method is known to be inaccurate for these inputs
    /// (a one-node Laguerre rule).
    pub reliable: bool,
}

impl EstimateOutcome {
    pub(crate) fn new(value: f64, method_used: Method) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Numerical(format!(
                "{} estimate is not positive and finite: {value}",
                method_used.as_str()
            )));
        }
        Ok(EstimateOutcome {
            value,
            method_used,
            gs_terms_used: None,
            reliable: true,
        })
    }

    /// `alpha == 2`: the mixing law is the point mass at 1.
    pub(crate) fn point_mass(method_used: Method) -> Self {
        EstimateOutcome {
            value: 1.0,
            method_used,
            gs_terms_used: None,
            reliable: true,
        }
    }

    /// True when a hybrid estimator left the Gamma series.
    pub fn is_fallback(&self) -> bool {
        self.method_used != Method::Gs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HybridKind {
    Gsis,
    Gsgl,
}

/// Gamma series first; on divergence, importance sampling (GSIS) or
/// Gauss–Laguerre quadrature (GSGL).
///
/// GSGL drops to importance sampling when `eta` is degenerate, the one
/// case where the quadrature substitution is undefined.
pub fn estimate_hybrid<R: Rng + ?Sized>(
    kind: HybridKind,
    post: &ScalePosterior,
    cfg: &GammaSeriesConfig,
    n_particles: usize,
    rule: &LaguerreRule,
    rng: &mut R,
) -> Result<EstimateOutcome> {
    if let GsOutcome::Converged(out) = estimate_gs(post, cfg)? {
        return Ok(out);
    }
    match kind {
        HybridKind::Gsis => estimate_is(post, n_particles, rng),
        HybridKind::Gsgl => match estimate_glq(post, rule) {
            Err(Error::DegenerateEta { .. }) => estimate_is(post, n_particles, rng),
            other => other,
        },
    }
}
