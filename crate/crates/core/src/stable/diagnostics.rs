//! Goodness-of-fit helpers for checking the mixing-law sampler.

use super::MixingLaw;

/// One-sample Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic p-value of a KS statistic `d` with effective sample size `n`
/// (Stephens' small-sample correction).
pub fn kolmogorov_p_value(d: f64, n: f64) -> f64 {
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    kolmogorov_survival(lambda)
}

/// `Q(lambda) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Monte Carlo check of `E[exp(-s Y)] = exp(-s^(alpha/2))`.
#[derive(Debug, Clone, Copy)]
pub struct LaplaceCheck {
    pub s: f64,
    pub empirical: f64,
    pub expected: f64,
    pub std_error: f64,
}

impl LaplaceCheck {
    pub fn z_score(&self) -> f64 {
        if self.std_error == 0.0 {
            if self.empirical == self.expected {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.empirical - self.expected).abs() / self.std_error
        }
    }

    pub fn passes(&self, max_z: f64) -> bool {
        self.z_score() < max_z
    }
}

pub fn laplace_check(law: &MixingLaw, samples: &[f64], s: f64) -> LaplaceCheck {
    let n = samples.len() as f64;
    let vals: Vec<f64> = samples.iter().map(|y| (-s * y).exp()).collect();
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    LaplaceCheck {
        s,
        empirical: mean,
        expected: law.laplace_transform(s),
        std_error: (var / n).sqrt(),
    }
}
