use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::noise::NoiseFamily;
use crate::filter::{IwParams, ScaleModel, SgasEstimator, VbConfig};
use crate::scale::GammaSeriesConfig;
use crate::stable::mixing_law;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FilterKind {
    /// Kalman filter with the nominal covariance.
    Kf,
    /// Kalman filter with the true noise covariance.
    Kftncm,
    RkfSgasIs,
    RkfSgasGlq,
    RkfSgasGsis,
    RkfSgasGsgl,
    Rstkf,
    RkfSl,
    RkfVg,
}

impl FilterKind {
    pub const ALL: [FilterKind; 9] = [
        FilterKind::Kf,
        FilterKind::Kftncm,
        FilterKind::RkfSgasIs,
        FilterKind::RkfSgasGlq,
        FilterKind::RkfSgasGsis,
        FilterKind::RkfSgasGsgl,
        FilterKind::Rstkf,
        FilterKind::RkfSl,
        FilterKind::RkfVg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Kf => "kf",
            FilterKind::Kftncm => "kftncm",
            FilterKind::RkfSgasIs => "rkf-sgas-is",
            FilterKind::RkfSgasGlq => "rkf-sgas-glq",
            FilterKind::RkfSgasGsis => "rkf-sgas-gsis",
            FilterKind::RkfSgasGsgl => "rkf-sgas-gsgl",
            FilterKind::Rstkf => "rstkf",
            FilterKind::RkfSl => "rkf-sl",
            FilterKind::RkfVg => "rkf-vg",
        }
    }

    pub fn valid_names() -> String {
        FilterKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
    }

    pub fn is_sgas(self) -> bool {
        matches!(
            self,
            FilterKind::RkfSgasIs | FilterKind::RkfSgasGlq | FilterKind::RkfSgasGsis | FilterKind::RkfSgasGsgl
        )
    }

    /// Whether the filter runs the fixed-point loop.
    pub fn is_variational(self) -> bool {
        !matches!(self, FilterKind::Kf | FilterKind::Kftncm)
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FilterKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown filter `{s}`; valid names: {}", FilterKind::valid_names())))
    }
}

impl TryFrom<String> for FilterKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FilterKind> for String {
    fn from(k: FilterKind) -> String {
        k.name().to_string()
    }
}

fn default_particles() -> usize {
    100
}
fn default_order() -> usize {
    2
}
fn default_max_iters() -> usize {
    50
}
fn default_eps2() -> f64 {
    1e-2
}
fn default_tau2() -> usize {
    4
}

/// One filter entry of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    pub kind: FilterKind,
    /// Output label; also keys the filter's random stream.
    #[serde(default)]
    pub name: Option<String>,
    /// `alpha` for RKF-SGαS, `v` for the benchmarks; tail-matched to the
    /// noise when absent.
    #[serde(default)]
    pub shape: Option<f64>,
    #[serde(default = "default_particles")]
    pub particles: usize,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub series: GammaSeriesConfig,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_eps2")]
    pub eps2: f64,
    #[serde(default = "default_tau2")]
    pub tau2: usize,
    /// Inverse-Wishart prior dof; the scenario's `iw_dof` when absent.
    #[serde(default)]
    pub iw_dof: Option<f64>,
}

impl FilterSpec {
    pub fn new(kind: FilterKind) -> Self {
        FilterSpec {
            kind,
            name: None,
            shape: None,
            particles: default_particles(),
            order: default_order(),
            series: GammaSeriesConfig::default(),
            max_iters: default_max_iters(),
            eps2: default_eps2(),
            tau2: default_tau2(),
            iw_dof: None,
        }
    }

    pub fn with_shape(mut self, shape: f64) -> Self {
        self.shape = Some(shape);
        self
    }

    /// The shape the filter runs with under `noise`.
    pub fn resolved_shape(&self, noise: &NoiseFamily) -> Option<f64> {
        if !self.kind.is_variational() {
            return None;
        }
        Some(self.shape.unwrap_or_else(|| default_shape(self.kind, noise)))
    }

    /// Measurement covariance for the plain Kalman filters; `None` when
    /// KFTNCM has no finite true covariance to use.
    pub fn fixed_covariance(&self, noise: &NoiseFamily, nominal_r: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        match self.kind {
            FilterKind::Kf => Some(nominal_r.clone()),
            FilterKind::Kftncm => noise.covariance_factor().map(|c| nominal_r * c),
            _ => None,
        }
    }

    /// Fixed-point configuration for the variational filters, with the
    /// inverse-Wishart prior centered on `nominal_r`.
    pub fn vb_config(&self, noise: &NoiseFamily, nominal_r: &DMatrix<f64>, default_iw_dof: f64) -> Result<VbConfig> {
        let shape = self
            .resolved_shape(noise)
            .ok_or_else(|| Error::domain(format!("{} has no fixed-point loop", self.kind)))?;
        let scale = match self.kind {
            FilterKind::RkfSgasIs
            | FilterKind::RkfSgasGlq
            | FilterKind::RkfSgasGsis
            | FilterKind::RkfSgasGsgl => {
                let estimator = match self.kind {
                    FilterKind::RkfSgasIs => SgasEstimator::Is {
                        particles: self.particles,
                    },
                    FilterKind::RkfSgasGlq => SgasEstimator::Glq {
                        order: self.order,
                        particles: self.particles,
                    },
                    FilterKind::RkfSgasGsis => SgasEstimator::Gsis {
                        particles: self.particles,
                        series: self.series,
                    },
                    _ => SgasEstimator::Gsgl {
                        order: self.order,
                        particles: self.particles,
                        series: self.series,
                    },
                };
                ScaleModel::Sgas {
                    law: mixing_law(shape)?,
                    estimator,
                }
            }
            FilterKind::Rstkf => ScaleModel::StudentT { dof: shape },
            FilterKind::RkfSl => ScaleModel::Slash { dof: shape },
            FilterKind::RkfVg => ScaleModel::VarianceGamma { dof: shape },
            FilterKind::Kf | FilterKind::Kftncm => unreachable!("checked above"),
        };
        let cfg = VbConfig {
            max_iters: self.max_iters,
            eps2: self.eps2,
            tau2: self.tau2,
            scale,
            iw_prior: IwParams::centered_on(nominal_r, self.iw_dof.unwrap_or(default_iw_dof))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `name` if given, else the kind with `@shape` appended when the shape
    /// is set explicitly.
    pub fn label(&self) -> String {
        match (&self.name, self.shape) {
            (Some(name), _) => name.clone(),
            (None, Some(s)) => format!("{}@{}", self.kind, s),
            (None, None) => self.kind.to_string(),
        }
    }
}

/// Tail-matched shape for a filter that was given none.
///
/// SGαS noise passes `alpha` to RKF-SGαS and `v = alpha` to the benchmarks;
/// t/slash/VG noise passes `v` to the benchmarks and `min(v, 1.9)` to
/// RKF-SGαS; Gaussian noise (`U = 1`) gets the light-tailed limits
/// `alpha = 2`, `v = 1e4`, and an outlier mixture gets `alpha = 1.5`, `v = 3`.
pub fn default_shape(kind: FilterKind, noise: &NoiseFamily) -> f64 {
    let sgas = kind.is_sgas();
    match *noise {
        NoiseFamily::Sgas { alpha } => alpha,
        NoiseFamily::StudentT { v } | NoiseFamily::Slash { v } | NoiseFamily::VarianceGamma { v } => {
            if sgas {
                v.min(1.9)
            } else {
                v
            }
        }
        NoiseFamily::GaussianMixture { u, .. } => match (u > 1.0, sgas) {
            (false, true) => 2.0,
            (false, false) => 1e4,
            (true, true) => 1.5,
            (true, false) => 3.0,
        },
    }
}
