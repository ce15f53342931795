use std::sync::OnceLock;

use super::{EstimateOutcome, Method, ScalePosterior, ETA_FLOOR};
use crate::special::log_sum_exp;
use crate::{Error, Result};

pub const MAX_LAGUERRE_ORDER: usize = 64;

/// Gauss–Laguerre rule for `int_0^inf e^{-x} g(x) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaguerreRule {
    pub order: usize,
    /// Roots of the Laguerre polynomial of degree `order`, increasing.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

static RULES: [OnceLock<LaguerreRule>; MAX_LAGUERRE_ORDER] = [const { OnceLock::new() }; MAX_LAGUERRE_ORDER];

/// The rule of the given order, computed once and cached.
pub fn laguerre_rule(order: usize) -> Result<&'static LaguerreRule> {
    if !(1..=MAX_LAGUERRE_ORDER).contains(&order) {
        return Err(Error::domain(format!(
            "Laguerre order must lie in 1..={MAX_LAGUERRE_ORDER}, got {order}"
        )));
    }
    Ok(RULES[order - 1].get_or_init(|| compute_rule(order)))
}

/// `(L_n(x), L_{n-1}(x))` by the three-term recurrence.
fn laguerre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = 1.0 - x;
    if n == 0 {
        return (prev, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

fn compute_rule(n: usize) -> LaguerreRule {
    let nf = n as f64;
    let mut nodes: Vec<f64> = Vec::with_capacity(n);
    let mut z = 0.0;
    for i in 0..n {
        // asymptotic initial guesses refined by Newton
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
            }
        };
        for _ in 0..100 {
            let (p, p_prev) = laguerre_pair(n, z);
            let dp = nf * (p - p_prev) / z;
            let step = p / dp;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        nodes.push(z);
    }
    nodes.sort_by(f64::total_cmp);
    let weights = nodes
        .iter()
        .map(|&x| {
            let (next, _) = laguerre_pair(n + 1, x);
            x / ((nf + 1.0).powi(2) * next * next)
        })
        .collect();
    LaguerreRule {
        order: n,
        nodes,
        weights,
    }
}

/// Gauss–Laguerre estimate after substituting `y = eta / (2x)`:
/// `sum w x f(x) / ((eta/2) sum w f(x))` with `f(x) = x^(m/2-2) S(eta/(2x))`.
pub fn estimate_glq(post: &ScalePosterior, rule: &LaguerreRule) -> Result<EstimateOutcome> {
    if post.law.is_degenerate() {
        return Ok(EstimateOutcome::point_mass(Method::Glq));
    }
    if post.eta <= ETA_FLOOR {
        return Err(Error::DegenerateEta { eta: post.eta });
    }
    let half_eta = post.eta / 2.0;
    let power = post.half_m() - 2.0;
    let mut ln_num = Vec::with_capacity(rule.order);
    let mut ln_den = Vec::with_capacity(rule.order);
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let ln_f = power * x.ln() + post.law.ln_pdf(half_eta / x)?;
        ln_den.push(w.ln() + ln_f);
        ln_num.push(w.ln() + x.ln() + ln_f);
    }
    let den = log_sum_exp(&ln_den);
    if !den.is_finite() {
        return Err(Error::Numerical("every quadrature integrand value underflowed".into()));
    }
    let mut out = EstimateOutcome::new((log_sum_exp(&ln_num) - den - half_eta.ln()).exp(), Method::Glq)?;
    out.reliable = rule.order > 1;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable::mixing_law;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, SymmetricEigen};

    #[test]
    fn order_one_and_two() {
        let r = laguerre_rule(1).unwrap();
        assert_relative_eq!(r.nodes[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.weights[0], 1.0, epsilon = 1e-14);

        let r = laguerre_rule(2).unwrap();
        let s = 2f64.sqrt();
        assert_relative_eq!(r.nodes[0], 2.0 - s, epsilon = 1e-14);
        assert_relative_eq!(r.nodes[1], 2.0 + s, epsilon = 1e-14);
        assert_relative_eq!(r.weights[0], (2.0 + s) / 4.0, epsilon = 1e-14);
        assert_relative_eq!(r.weights[1], (2.0 - s) / 4.0, epsilon = 1e-14);
    }

    #[test]
    fn order_bounds() {
        assert!(laguerre_rule(0).is_err());
        assert!(laguerre_rule(65).is_err());
        assert!(laguerre_rule(64).is_ok());
    }

    #[test]
    fn moments_for_every_order() {
        for n in 1..=MAX_LAGUERRE_ORDER {
            let r = laguerre_rule(n).unwrap();
            assert_eq!(r.nodes.len(), n);
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]), "order {n}");
            assert!(r.weights.iter().all(|&w| w > 0.0), "order {n}");
            let m0: f64 = r.weights.iter().sum();
            let m1: f64 = r.weights.iter().zip(&r.nodes).map(|(w, x)| w * x).sum();
            assert!((m0 - 1.0).abs() < 1e-12, "order {n}: {m0}");
            assert!((m1 - 1.0).abs() < 1e-12, "order {n}: {m1}");
        }
    }

    #[test]
    fn nodes_match_jacobi_eigenvalues() {
        // Golub–Welsch: the Jacobi matrix has diagonal 2k+1 and off-diagonal k
        for &n in &[5usize, 17, 30, 64] {
            let mut j = DMatrix::<f64>::zeros(n, n);
            for k in 0..n {
                j[(k, k)] = 2.0 * k as f64 + 1.0;
                if k + 1 < n {
                    j[(k, k + 1)] = (k + 1) as f64;
                    j[(k + 1, k)] = (k + 1) as f64;
                }
            }
            let eig = SymmetricEigen::new(j);
            let mut pairs: Vec<(f64, f64)> = (0..n)
                .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let r = laguerre_rule(n).unwrap();
            for (i, (x, w)) in pairs.into_iter().enumerate() {
                assert!((r.nodes[i] - x).abs() < 1e-12 * x.max(1.0), "n={n} i={i} {} vs {x}", r.nodes[i]);
                if w > 1e-200 {
                    assert_relative_eq!(r.weights[i], w, max_relative = 1e-8);
                }
            }
        }
    }

    #[test]
    fn order_one_gives_two_over_eta_and_is_unreliable() {
        let post = ScalePosterior::new(3.0, 2, mixing_law(1.85).unwrap()).unwrap();
        let out = estimate_glq(&post, laguerre_rule(1).unwrap()).unwrap();
        assert_relative_eq!(out.value, 2.0 / 3.0, max_relative = 1e-14);
        assert!(!out.reliable);
    }

    #[test]
    fn degenerate_eta_is_rejected() {
        let post = ScalePosterior::new(1e-13, 2, mixing_law(1.0).unwrap()).unwrap();
        assert!(matches!(
            estimate_glq(&post, laguerre_rule(4).unwrap()),
            Err(Error::DegenerateEta { .. })
        ));
    }

    #[test]
    fn levy_oracle_at_eta_ten() {
        let post = ScalePosterior::new(10.0, 2, mixing_law(1.0).unwrap()).unwrap();
        let out = estimate_glq(&post, laguerre_rule(30).unwrap()).unwrap();
        assert_relative_eq!(out.value, 3.0 / 10.5, max_relative = 1e-3);
    }
}
