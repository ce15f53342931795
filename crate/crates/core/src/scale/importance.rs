use rand::Rng;

use super::{EstimateOutcome, Method, ScalePosterior};
use crate::special::log_sum_exp;
use crate::{Error, Result};

/// Self-normalized importance sampling with the mixing law as proposal.
///
/// Weights `y^(-m/2) exp(-eta / (2y))` are formed in log domain; a single
/// particle returns its own `1/y`.
pub fn estimate_is<R: Rng + ?Sized>(post: &ScalePosterior, n_particles: usize, rng: &mut R) -> Result<EstimateOutcome> {
    if n_particles == 0 {
        return Err(Error::domain("importance sampling needs at least one particle"));
    }
    if post.law.is_degenerate() {
        return Ok(EstimateOutcome::point_mass(Method::Is));
    }
    let half_m = post.half_m();
    let half_eta = post.eta / 2.0;
    if n_particles == 1 {
        let y = post.law.sample(rng);
        return EstimateOutcome::new(1.0 / y, Method::Is);
    }
    let mut ln_w = Vec::with_capacity(n_particles);
    let mut ln_wy = Vec::with_capacity(n_particles);
    for _ in 0..n_particles {
        let ln_y = post.law.sample_ln(rng);
        let ln_inv_y = -ln_y;
        let lw = half_m * ln_inv_y - half_eta * ln_inv_y.exp();
        ln_w.push(lw);
        ln_wy.push(lw + ln_inv_y);
    }
    let den = log_sum_exp(&ln_w);
    if !den.is_finite() {
        return Err(Error::WeightsUnderflow);
    }
    EstimateOutcome::new((log_sum_exp(&ln_wy) - den).exp(), Method::Is)
}
