use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scale::{
    estimate_glq, estimate_hybrid, estimate_is, laguerre_rule, slash_scale_mean, student_t_scale_mean, vg_scale_mean,
    EstimateOutcome, GammaSeriesConfig, HybridKind, ScalePosterior,
};
use crate::stable::MixingLaw;
use crate::{Error, Result};

/// Estimator of `E[1/lambda]` for SGαS noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SgasEstimator {
    Is {
        particles: usize,
    },
    /// `particles` drive importance sampling when `eta` is degenerate.
    Glq {
        order: usize,
        particles: usize,
    },
    Gsis {
        particles: usize,
        series: GammaSeriesConfig,
    },
    Gsgl {
        order: usize,
        particles: usize,
        series: GammaSeriesConfig,
    },
}

/// How `E[kappa]` is obtained from the residual statistic `eta`.
///
/// SGαS uses `kappa = 1/lambda`; the benchmark mixtures use `kappa = y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScaleModel {
    Sgas { law: MixingLaw, estimator: SgasEstimator },
    StudentT { dof: f64 },
    Slash { dof: f64 },
    VarianceGamma { dof: f64 },
    /// `E[kappa]` held at a constant.
    Pinned { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaEstimate {
    pub value: f64,
    pub fallback: bool,
    pub outcome: Option<EstimateOutcome>,
}

impl KappaEstimate {
    fn closed_form(value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Numerical(format!("scale mean is not positive and finite: {value}")));
        }
        Ok(KappaEstimate {
            value,
            fallback: false,
            outcome: None,
        })
    }
}

/// Importance sampling is retried once with this many times the particles.
const IS_RETRY_FACTOR: usize = 10;

fn is_with_retry<R: Rng + ?Sized>(post: &ScalePosterior, particles: usize, rng: &mut R) -> Result<EstimateOutcome> {
    match estimate_is(post, particles, rng) {
        Err(Error::WeightsUnderflow) | Err(Error::Numerical(_)) => {
            estimate_is(post, particles.saturating_mul(IS_RETRY_FACTOR), rng)
        }
        other => other,
    }
}

impl ScaleModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScaleModel::Sgas { estimator, .. } => {
                let check_order = |order: usize| laguerre_rule(order).map(|_| ());
                let check_particles = |n: usize| {
                    if n == 0 {
                        Err(Error::domain("particle count must be positive"))
                    } else {
                        Ok(())
                    }
                };
                match estimator {
                    SgasEstimator::Is { particles } => check_particles(particles),
                    SgasEstimator::Glq { order, particles } => {
                        check_order(order)?;
                        check_particles(particles)
                    }
                    SgasEstimator::Gsis { particles, series } => {
                        series.validate()?;
                        check_particles(particles)
                    }
                    SgasEstimator::Gsgl {
                        order,
                        particles,
                        series,
                    } => {
                        series.validate()?;
                        check_order(order)?;
                        check_particles(particles)
                    }
                }
            }
            ScaleModel::StudentT { dof } | ScaleModel::Slash { dof } | ScaleModel::VarianceGamma { dof } => {
                if dof > 0.0 && dof.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain(format!("dof must be positive, got {dof}")))
                }
            }
            ScaleModel::Pinned { value } => {
                if value > 0.0 && value.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain("pinned E[kappa] must be positive"))
                }
            }
        }
    }

    /// `E[kappa]` under the current scale posterior.
    pub fn expected_kappa<R: Rng + ?Sized>(&self, eta: f64, m: usize, rng: &mut R) -> Result<KappaEstimate> {
        match *self {
            ScaleModel::Sgas { law, estimator } => {
                let post = ScalePosterior::new(eta, m, law)?;
                let out = match estimator {
                    SgasEstimator::Is { particles } => is_with_retry(&post, particles, rng)?,
                    SgasEstimator::Glq { order, particles } => match estimate_glq(&post, laguerre_rule(order)?) {
                        Err(Error::DegenerateEta { .. }) => is_with_retry(&post, particles, rng)?,
                        other => other?,
                    },
                    SgasEstimator::Gsis { particles, series } => {
                        let rule = laguerre_rule(1)?;
                        match estimate_hybrid(HybridKind::Gsis, &post, &series, particles, rule, rng) {
                            Err(Error::WeightsUnderflow) | Err(Error::Numerical(_)) => {
                                estimate_is(&post, particles.saturating_mul(IS_RETRY_FACTOR), rng)?
                            }
                            other => other?,
                        }
                    }
                    SgasEstimator::Gsgl {
                        order,
                        particles,
                        series,
                    } => estimate_hybrid(HybridKind::Gsgl, &post, &series, particles, laguerre_rule(order)?, rng)?,
                };
                let fallback = matches!(estimator, SgasEstimator::Gsis { .. } | SgasEstimator::Gsgl { .. })
                    && out.is_fallback();
                Ok(KappaEstimate {
                    value: out.value,
                    fallback,
                    outcome: Some(out),
                })
            }
            ScaleModel::StudentT { dof } => KappaEstimate::closed_form(student_t_scale_mean(eta, m, dof)),
            ScaleModel::Slash { dof } => KappaEstimate::closed_form(slash_scale_mean(eta, m, dof)),
            ScaleModel::VarianceGamma { dof } => KappaEstimate::closed_form(vg_scale_mean(eta, m, dof)),
            ScaleModel::Pinned { value } => KappaEstimate::closed_form(value),
        }
    }
}
