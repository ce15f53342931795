use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::filters::FilterSpec;
use super::noise::{gaussian_draw, psd_sqrt, sample_measurement_noise, NoiseFamily};
use crate::filter::{GaussianBelief, StateSpaceModel};
use crate::{Error, Result};

fn default_steps() -> usize {
    100
}
fn default_dt() -> f64 {
    1.0
}
fn default_q_factor() -> f64 {
    0.1
}
fn default_x0() -> Vec<f64> {
    vec![0.0, 0.0, 10.0, 10.0]
}
fn default_p0_diag() -> Vec<f64> {
    vec![25.0, 25.0, 2.0, 2.0]
}
fn default_nominal_r() -> Vec<Vec<f64>> {
    vec![vec![10.0, 0.0], vec![0.0, 10.0]]
}
fn default_mc_runs() -> usize {
    20
}
fn default_loss_threshold() -> f64 {
    500.0
}
fn default_warmup() -> usize {
    10
}
fn default_min_fraction() -> f64 {
    0.95
}
fn default_iw_dof() -> f64 {
    1000.0
}

/// A constant-velocity tracking experiment in the plane.
///
/// The state is `[px, py, vx, vy]` and the measurement is the position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// `Q = q_factor * Q̄`.
    #[serde(default = "default_q_factor")]
    pub q_factor: f64,
    #[serde(default = "default_x0")]
    pub x0: Vec<f64>,
    #[serde(default = "default_p0_diag")]
    pub p0_diag: Vec<f64>,
    /// Nominal measurement covariance `R̄`, row-major.
    #[serde(default = "default_nominal_r")]
    pub nominal_r: Vec<Vec<f64>>,
    #[serde(default = "default_mc_runs")]
    pub mc_runs: usize,
    #[serde(default)]
    pub seed: u64,
    pub noise: NoiseFamily,
    pub filters: Vec<FilterSpec>,
    /// Position error beyond which a run counts as lost.
    #[serde(default = "default_loss_threshold")]
    pub loss_threshold: f64,
    /// Steps excluded from the loss test and the time-averaged RMSE.
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    /// Fraction of runs that must survive for a filter to be effective.
    #[serde(default = "default_min_fraction")]
    pub min_fraction: f64,
    /// Inverse-Wishart prior dof for filters that set none; the prior is
    /// centered on `nominal_r`.
    #[serde(default = "default_iw_dof")]
    pub iw_dof: f64,
}

impl ScenarioConfig {
    pub fn new(noise: NoiseFamily, filters: Vec<FilterSpec>) -> Self {
        ScenarioConfig {
            steps: default_steps(),
            dt: default_dt(),
            q_factor: default_q_factor(),
            x0: default_x0(),
            p0_diag: default_p0_diag(),
            nominal_r: default_nominal_r(),
            mc_runs: default_mc_runs(),
            seed: 0,
            noise,
            filters,
            loss_threshold: default_loss_threshold(),
            warmup: default_warmup(),
            min_fraction: default_min_fraction(),
            iw_dof: default_iw_dof(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 || self.mc_runs < 1 {
            return Err(Error::domain("steps and mc_runs must be at least 1"));
        }
        if !(self.dt > 0.0) || !(self.q_factor >= 0.0) {
            return Err(Error::domain("dt must be positive and q_factor nonnegative"));
        }
        if self.x0.len() != 4 || self.p0_diag.len() != 4 || self.p0_diag.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::domain("x0 needs 4 entries and p0_diag 4 positive entries"));
        }
        if self.nominal_r.len() != 2 || self.nominal_r.iter().any(|row| row.len() != 2) {
            return Err(Error::domain("nominal_r must be 2x2"));
        }
        let r = self.nominal_r();
        if (&r - r.transpose()).amax() > 1e-12 * r.amax() || r.clone().cholesky().is_none() {
            return Err(Error::domain("nominal_r must be symmetric positive definite"));
        }
        if !(self.loss_threshold > 0.0) || !(self.min_fraction > 0.0 && self.min_fraction <= 1.0) {
            return Err(Error::domain("loss_threshold must be positive and min_fraction in (0, 1]"));
        }
        self.noise.validate()?;
        let mut labels: Vec<String> = self.filters.iter().map(FilterSpec::label).collect();
        labels.sort();
        if let Some(pair) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::domain(format!("duplicate filter label `{}`; set `name` to tell them apart", pair[0])));
        }
        for spec in &self.filters {
            if spec.kind.is_variational() {
                spec.vb_config(&self.noise, &r, self.iw_dof)?;
            }
        }
        Ok(())
    }

    pub fn nominal_r(&self) -> DMatrix<f64> {
        DMatrix::from_fn(2, 2, |i, j| self.nominal_r[i][j])
    }

    pub fn model(&self) -> Result<StateSpaceModel> {
        cv_model(self.dt, self.q_factor)
    }

    /// The filters' common starting belief `N(x0, P0)`.
    pub fn initial_belief(&self) -> Result<GaussianBelief> {
        GaussianBelief::new(
            DVector::from_vec(self.x0.clone()),
            DMatrix::from_diagonal(&DVector::from_vec(self.p0_diag.clone())),
        )
    }
}

/// Constant-velocity model with `Q = q_factor * Q̄`, where `Q̄` has per-axis
/// blocks `[[dt^3/3, dt^2/2], [dt^2/2, dt]]`.
pub fn cv_model(dt: f64, q_factor: f64) -> Result<StateSpaceModel> {
    let i2 = DMatrix::<f64>::identity(2, 2);
    let mut f = DMatrix::identity(4, 4);
    f.view_mut((0, 2), (2, 2)).copy_from(&(&i2 * dt));
    let mut h = DMatrix::zeros(2, 4);
    h.view_mut((0, 0), (2, 2)).copy_from(&i2);
    let mut q = DMatrix::zeros(4, 4);
    q.view_mut((0, 0), (2, 2)).copy_from(&(&i2 * (dt.powi(3) / 3.0)));
    q.view_mut((0, 2), (2, 2)).copy_from(&(&i2 * (dt * dt / 2.0)));
    q.view_mut((2, 0), (2, 2)).copy_from(&(&i2 * (dt * dt / 2.0)));
    q.view_mut((2, 2), (2, 2)).copy_from(&(&i2 * dt));
    StateSpaceModel::new(f, h, q * q_factor)
}

/// Purpose of a random stream within one Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    /// Initial state, process noise and measurement noise.
    Truth,
    /// Random draws of one filter, keyed by its label.
    Filter(u64),
}

impl StreamRole {
    pub fn for_filter(label: &str) -> Self {
        // FNV-1a: stable across builds and platforms
        let hash = label
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3));
        StreamRole::Filter(hash)
    }

    fn key(self) -> u64 {
        match self {
            StreamRole::Truth => 0,
            StreamRole::Filter(h) => h | 1,
        }
    }
}

/// ChaCha stream for `(master_seed, role)` selected by `run_index`, so draws
/// do not depend on run order or on which other streams exist.
pub fn stream_rng(master_seed: u64, run_index: u64, role: StreamRole) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&role.key().to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(run_index);
    rng
}

/// One simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    /// True states at steps `1..=T`.
    pub states: Vec<DVector<f64>>,
    pub measurements: Vec<DVector<f64>>,
}

/// Draws `x_0 ~ N(x0, P0)` and propagates it for `steps` steps.
pub fn simulate_track(cfg: &ScenarioConfig, run_index: u64, master_seed: u64) -> Result<Track> {
    let model = cfg.model()?;
    let init = cfg.initial_belief()?;
    let sqrt_p0 = psd_sqrt(&init.cov);
    let sqrt_q = psd_sqrt(&model.q);
    let sqrt_r = psd_sqrt(&cfg.nominal_r());
    let mut rng = stream_rng(master_seed, run_index, StreamRole::Truth);
    let mut x = &init.mean + gaussian_draw(&sqrt_p0, &mut rng);
    let mut states = Vec::with_capacity(cfg.steps);
    let mut measurements = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        x = &model.f * &x + gaussian_draw(&sqrt_q, &mut rng);
        let v = sample_measurement_noise(&cfg.noise, &sqrt_r, &mut rng);
        measurements.push(&model.h * &x + v);
        states.push(x.clone());
    }
    Ok(Track { states, measurements })
}
