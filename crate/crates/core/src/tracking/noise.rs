use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::stable::mixing_law;
use crate::{Error, Result};

/// Measurement-noise family: a Gaussian scale mixture of `N(0, R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseFamily {
    /// `sqrt(Y) N(0, R)` with `Y` positive stable of index `alpha/2`.
    Sgas { alpha: f64 },
    /// `N(0, R / g)`, `g ~ Gamma(v/2, rate v/2)`.
    StudentT { v: f64 },
    /// `N(0, R / y)`, `y` with density `(v/2) y^(v/2-1)` on (0, 1).
    Slash { v: f64 },
    /// `N(0, R / y)`, `1/y ~ Gamma(v/2, rate v/2)`.
    VarianceGamma { v: f64 },
    /// `N(0, U R)` with probability `p_outlier`, else `N(0, R)`.
    GaussianMixture {
        u: f64,
        #[serde(default = "default_p_outlier")]
        p_outlier: f64,
    },
}

fn default_p_outlier() -> f64 {
    0.1
}

impl NoiseFamily {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            NoiseFamily::Sgas { alpha } => alpha > 0.0 && alpha <= 2.0,
            NoiseFamily::StudentT { v } | NoiseFamily::Slash { v } | NoiseFamily::VarianceGamma { v } => {
                v > 0.0 && v.is_finite()
            }
            NoiseFamily::GaussianMixture { u, p_outlier } => {
                u >= 1.0 && u.is_finite() && p_outlier > 0.0 && p_outlier < 1.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid noise parameters: {self:?}")))
        }
    }

    /// The swept parameter: `alpha`, `v` or `U`.
    pub fn shape(&self) -> f64 {
        match *self {
            NoiseFamily::Sgas { alpha } => alpha,
            NoiseFamily::StudentT { v } | NoiseFamily::Slash { v } | NoiseFamily::VarianceGamma { v } => v,
            NoiseFamily::GaussianMixture { u, .. } => u,
        }
    }

    pub fn with_shape(self, value: f64) -> Self {
        match self {
            NoiseFamily::Sgas { .. } => NoiseFamily::Sgas { alpha: value },
            NoiseFamily::StudentT { .. } => NoiseFamily::StudentT { v: value },
            NoiseFamily::Slash { .. } => NoiseFamily::Slash { v: value },
            NoiseFamily::VarianceGamma { .. } => NoiseFamily::VarianceGamma { v: value },
            NoiseFamily::GaussianMixture { p_outlier, .. } => NoiseFamily::GaussianMixture { u: value, p_outlier },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseFamily::Sgas { .. } => "sgas",
            NoiseFamily::StudentT { .. } => "student-t",
            NoiseFamily::Slash { .. } => "slash",
            NoiseFamily::VarianceGamma { .. } => "variance-gamma",
            NoiseFamily::GaussianMixture { .. } => "gaussian-mixture",
        }
    }

    /// `c` with `Cov(v) = c R`, or `None` when the second moment is infinite.
    pub fn covariance_factor(&self) -> Option<f64> {
        match *self {
            NoiseFamily::Sgas { alpha } => (alpha == 2.0).then_some(1.0),
            NoiseFamily::StudentT { v } | NoiseFamily::Slash { v } => (v > 2.0).then(|| v / (v - 2.0)),
            NoiseFamily::VarianceGamma { .. } => Some(1.0),
            NoiseFamily::GaussianMixture { u, p_outlier } => Some(1.0 + p_outlier * (u - 1.0)),
        }
    }

    /// Variance multiplier `s` such that the draw is `sqrt(s) N(0, R)`.
    pub fn sample_variance_multiplier<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseFamily::Sgas { alpha } => {
                let law = mixing_law(alpha).expect("alpha validated");
                law.sample(rng)
            }
            NoiseFamily::StudentT { v } => 1.0 / gamma_draw(v / 2.0, 2.0 / v, rng),
            NoiseFamily::Slash { v } => {
                let u: f64 = rng.random();
                // y = u^(2/v) has density (v/2) y^(v/2 - 1) on (0, 1)
                1.0 / u.powf(2.0 / v)
            }
            NoiseFamily::VarianceGamma { v } => gamma_draw(v / 2.0, 2.0 / v, rng),
            NoiseFamily::GaussianMixture { u, p_outlier } => {
                let outlier = Bernoulli::new(p_outlier).expect("p_outlier validated").sample(rng);
                if outlier {
                    u
                } else {
                    1.0
                }
            }
        }
    }
}

fn gamma_draw<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, scale).expect("positive gamma parameters").sample(rng)
}

/// Symmetric square root of a positive semidefinite matrix; negative
/// eigenvalues from round-off are clipped to zero.
pub fn psd_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = a.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// `sqrt_r z` with `z ~ N(0, I)`.
pub fn gaussian_draw<R: Rng + ?Sized>(sqrt_cov: &DMatrix<f64>, rng: &mut R) -> DVector<f64> {
    let z = DVector::from_fn(sqrt_cov.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
    sqrt_cov * z
}

/// One measurement-noise vector with nominal covariance `sqrt_r sqrt_rᵀ`.
pub fn sample_measurement_noise<R: Rng + ?Sized>(
    family: &NoiseFamily,
    sqrt_r: &DMatrix<f64>,
    rng: &mut R,
) -> DVector<f64> {
    let s = family.sample_variance_multiplier(rng);
    gaussian_draw(sqrt_r, rng) * s.sqrt()
}
