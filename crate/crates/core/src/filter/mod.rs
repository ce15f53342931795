//! The variational-Bayes fixed-point filter step and its building blocks.
//!
//! One generic loop serves every Gaussian scale mixture: only the call that
//! produces `E[kappa]` differs between RKF-SGαS, RSTKF, RKF-SL and RKF-VG.

mod scale_model;

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use scale_model::{KappaEstimate, ScaleModel, SgasEstimator};

/// Relative jitter added once when a factorization fails.
const JITTER: f64 = 1e-9;

/// `x_k = F x_{k-1} + w`, `z_k = H x_k + v`, `w ~ N(0, Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub f: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

impl StateSpaceModel {
    pub fn new(f: DMatrix<f64>, h: DMatrix<f64>, q: DMatrix<f64>) -> Result<Self> {
        let n = f.nrows();
        if f.ncols() != n || h.ncols() != n || q.shape() != (n, n) || h.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "F {:?}, H {:?}, Q {:?}",
                f.shape(),
                h.shape(),
                q.shape()
            )));
        }
        if !is_symmetric(&q, 1e-10) {
            return Err(Error::domain("Q must be symmetric"));
        }
        Ok(StateSpaceModel { f, h, q })
    }

    pub fn n(&self) -> usize {
        self.f.nrows()
    }

    pub fn m(&self) -> usize {
        self.h.nrows()
    }
}

/// Gaussian posterior or predicted belief `N(mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianBelief {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.shape() != (mean.len(), mean.len()) {
            return Err(Error::Dimension(format!("mean {} vs cov {:?}", mean.len(), cov.shape())));
        }
        Ok(GaussianBelief { mean, cov })
    }

    pub fn is_finite(&self) -> bool {
        self.mean.iter().chain(self.cov.iter()).all(|v| v.is_finite())
    }
}

/// Inverse-Wishart parameters `(u, U)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IwParams {
    pub dof: f64,
    pub scale: DMatrix<f64>,
}

impl IwParams {
    pub fn new(dof: f64, scale: DMatrix<f64>) -> Result<Self> {
        let m = scale.nrows();
        if scale.ncols() != m {
            return Err(Error::Dimension(format!("IW scale {:?}", scale.shape())));
        }
        if !(dof > m as f64 + 1.0) {
            return Err(Error::domain(format!("IW dof must exceed m + 1 = {}, got {dof}", m + 1)));
        }
        if scale.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("IW scale"));
        }
        Ok(IwParams { dof, scale })
    }

    /// Prior with `E[R] = nominal`: `U = (dof - m - 1) nominal`.
    pub fn centered_on(nominal: &DMatrix<f64>, dof: f64) -> Result<Self> {
        let m = nominal.nrows() as f64;
        IwParams::new(dof, nominal * (dof - m - 1.0))
    }

    /// `(u - m - 1) U^{-1}`.
    pub fn expected_precision(&self) -> Result<DMatrix<f64>> {
        let m = self.scale.nrows() as f64;
        Ok(spd_inverse(&self.scale, "IW scale")? * (self.dof - m - 1.0))
    }
}

/// Fixed-point iteration settings for one filter step.
#[derive(Debug, Clone, PartialEq)]
pub struct VbConfig {
    pub max_iters: usize,
    pub eps2: f64,
    pub tau2: usize,
    pub scale: ScaleModel,
    pub iw_prior: IwParams,
}

impl VbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau2 < 1 || self.max_iters < self.tau2 + 1 {
            return Err(Error::domain(format!(
                "need max_iters >= tau2 + 1 >= 2, got max_iters = {}, tau2 = {}",
                self.max_iters, self.tau2
            )));
        }
        if !(self.eps2 > 0.0) {
            return Err(Error::domain("eps2 must be positive"));
        }
        self.scale.validate()
    }
}

/// Diagnostics of one filter step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VbStepReport {
    pub iterations: usize,
    pub e_kappa: f64,
    /// Scale estimates made during the step.
    pub estimates: usize,
    /// Estimates where a hybrid left the Gamma series.
    pub fallbacks: usize,
    pub converged: bool,
    pub wall_time: Duration,
}

impl VbStepReport {
    pub fn fallback_used(&self) -> bool {
        self.fallbacks > 0
    }
}

pub(crate) fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

fn is_symmetric(a: &DMatrix<f64>, rel: f64) -> bool {
    let scale = a.amax().max(f64::MIN_POSITIVE);
    (a - a.transpose()).amax() <= rel * scale
}

/// Cholesky factor, retried once with `JITTER * tr(a) / dim` on the diagonal.
fn cholesky_with_jitter(a: &DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = a.clone().cholesky() {
        return Some(c);
    }
    let dim = a.nrows();
    let bump = JITTER * a.trace().abs() / dim as f64;
    (a + DMatrix::identity(dim, dim) * bump).cholesky()
}

fn spd_inverse(a: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    cholesky_with_jitter(a)
        .map(|c| symmetrize(&c.inverse()))
        .ok_or(Error::NotPositiveDefinite(what))
}

/// `mean = F x`, `cov = F P F^T + Q`.
pub fn predict(model: &StateSpaceModel, posterior: &GaussianBelief) -> GaussianBelief {
    GaussianBelief {
        mean: &model.f * &posterior.mean,
        cov: symmetrize(&(&model.f * &posterior.cov * model.f.transpose() + &model.q)),
    }
}

/// Kalman measurement update with covariance `r_tilde`, solved through a
/// Cholesky factor of the innovation covariance.
pub fn kf_update(
    pred: &GaussianBelief,
    z: &DVector<f64>,
    r_tilde: &DMatrix<f64>,
    model: &StateSpaceModel,
) -> Result<GaussianBelief> {
    let h = &model.h;
    let ph_t = &pred.cov * h.transpose();
    let innovation = symmetrize(&(h * &ph_t + r_tilde));
    let chol = cholesky_with_jitter(&innovation).ok_or(Error::InnovationNotSpd)?;
    // K^T = S^{-1} H P
    let gain = chol.solve(&ph_t.transpose()).transpose();
    let residual = z - h * &pred.mean;
    let n = pred.mean.len();
    Ok(GaussianBelief {
        mean: &pred.mean + &gain * residual,
        cov: symmetrize(&((DMatrix::identity(n, n) - &gain * h) * &pred.cov)),
    })
}

/// `(E[R^{-1}])^{-1} / E[kappa]`.
pub fn modified_covariance(e_r_inv: &DMatrix<f64>, e_kappa: f64) -> Result<DMatrix<f64>> {
    if !(e_kappa > 0.0 && e_kappa.is_finite()) {
        return Err(Error::domain(format!("E[kappa] must be positive and finite, got {e_kappa}")));
    }
    Ok(spd_inverse(e_r_inv, "E[R^-1]")? / e_kappa)
}

/// `B = b b^T + H P H^T` with `b = z - H x` and `eta = tr(B E[R^{-1}])`.
pub fn eta_and_b(
    z: &DVector<f64>,
    belief: &GaussianBelief,
    e_r_inv: &DMatrix<f64>,
    model: &StateSpaceModel,
) -> (f64, DMatrix<f64>) {
    let b_mat = residual_spread(z, belief, model);
    let eta = b_mat.component_mul(e_r_inv).sum().max(0.0);
    (eta, b_mat)
}

fn residual_spread(z: &DVector<f64>, belief: &GaussianBelief, model: &StateSpaceModel) -> DMatrix<f64> {
    let b = z - &model.h * &belief.mean;
    symmetrize(&(&b * b.transpose() + &model.h * &belief.cov * model.h.transpose()))
}

/// `u+ = u + 1`, `U+ = U + E[kappa] (b b^T + H P H^T)` and
/// `E[R^{-1}] = (u+ - m - 1) (U+)^{-1}`.
pub fn iw_update(
    prior: &IwParams,
    z: &DVector<f64>,
    belief: &GaussianBelief,
    e_kappa: f64,
    model: &StateSpaceModel,
) -> Result<(IwParams, DMatrix<f64>)> {
    let spread = residual_spread(z, belief, model);
    let post = IwParams {
        dof: prior.dof + 1.0,
        scale: symmetrize(&(&prior.scale + spread * e_kappa)),
    };
    let e_r_inv = post.expected_precision()?;
    Ok((post, e_r_inv))
}

/// One entry of the fixed-point history: `(x, P, E[kappa])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub e_kappa: f64,
}

fn relative_change<'a, I: Iterator<Item = (&'a f64, &'a f64)>>(pairs: I) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (cur, prev) in pairs {
        num += (cur - prev).abs();
        den += cur.abs();
    }
    match (num == 0.0, den == 0.0) {
        (true, _) => 0.0,
        (false, true) => f64::INFINITY,
        (false, false) => num / den,
    }
}

/// True when, for each of `x`, `P` and `E[kappa]`, the relative changes over
/// the last `tau2 + 1` iterations sum to less than `eps2`.
///
/// The first entry of `history` is the starting point, so at least
/// `tau2 + 2` entries are needed.
pub fn fixed_point_converged(history: &[Iterate], eps2: f64, tau2: usize) -> bool {
    let len = history.len();
    if len < tau2 + 2 {
        return false;
    }
    let window = &history[len - tau2 - 2..];
    let mut sums = [0.0f64; 3];
    for w in window.windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        sums[0] += relative_change(cur.mean.iter().zip(prev.mean.iter()));
        sums[1] += relative_change(cur.cov.iter().zip(prev.cov.iter()));
        sums[2] += relative_change(std::iter::once((&cur.e_kappa, &prev.e_kappa)));
    }
    sums.iter().all(|&s| s < eps2)
}

/// One time step of the robust filter: predict, then iterate
/// `modified_covariance -> kf_update -> eta_and_b -> E[kappa] -> iw_update`
/// until the fixed point test passes or `max_iters` is reached.
pub fn filter_step<R: Rng + ?Sized>(
    model: &StateSpaceModel,
    prior_belief: &GaussianBelief,
    z: &DVector<f64>,
    cfg: &VbConfig,
    rng: &mut R,
) -> Result<(GaussianBelief, VbStepReport)> {
    let start = Instant::now();
    let m = model.m();
    if z.len() != m {
        return Err(Error::Dimension(format!("measurement has {} entries, H has {m} rows", z.len())));
    }
    let pred = predict(model, prior_belief);
    let mut e_r_inv = cfg.iw_prior.expected_precision()?;
    let mut e_kappa = 1.0;
    let mut history = vec![Iterate {
        mean: pred.mean.clone(),
        cov: pred.cov.clone(),
        e_kappa,
    }];
    let mut belief = pred.clone();
    let mut report = VbStepReport {
        iterations: 0,
        e_kappa,
        estimates: 0,
        fallbacks: 0,
        converged: false,
        wall_time: Duration::ZERO,
    };
    for iter in 1..=cfg.max_iters {
        let r_tilde = modified_covariance(&e_r_inv, e_kappa)?;
        belief = kf_update(&pred, z, &r_tilde, model)?;
        let (eta, _) = eta_and_b(z, &belief, &e_r_inv, model);
        let est = cfg.scale.expected_kappa(eta, m, rng)?;
        report.estimates += 1;
        if est.fallback {
            report.fallbacks += 1;
        }
        e_kappa = est.value;
        let (_, next_e_r_inv) = iw_update(&cfg.iw_prior, z, &belief, e_kappa, model)?;
        e_r_inv = next_e_r_inv;
        if !belief.is_finite() {
            return Err(Error::Numerical("non-finite state estimate".into()));
        }
        history.push(Iterate {
            mean: belief.mean.clone(),
            cov: belief.cov.clone(),
            e_kappa,
        });
        report.iterations = iter;
        if fixed_point_converged(&history, cfg.eps2, cfg.tau2) {
            report.converged = true;
            break;
        }
    }
    report.e_kappa = e_kappa;
    report.wall_time = start.elapsed();
    Ok((belief, report))
}

/// Standard Kalman step with a fixed measurement covariance.
pub fn kf_step(
    model: &StateSpaceModel,
    prior_belief: &GaussianBelief,
    z: &DVector<f64>,
    r: &DMatrix<f64>,
) -> Result<GaussianBelief> {
    kf_update(&predict(model, prior_belief), z, r, model)
}
