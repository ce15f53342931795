use std::time::{Duration, Instant};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::filters::{FilterKind, FilterSpec};
use super::scenario::{simulate_track, stream_rng, ScenarioConfig, StreamRole, Track};
use crate::filter::{filter_step, kf_step, VbStepReport};
use crate::Result;

/// One filter over one simulated track.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    /// Squared position errors, one per completed step.
    pub pos_sq_err: Vec<f64>,
    pub vel_sq_err: Vec<f64>,
    /// Step (1-based) and message of the failure that ended the run early.
    pub failure: Option<(usize, String)>,
    pub wall_time: Duration,
    /// Empty for the plain Kalman filters.
    pub reports: Vec<VbStepReport>,
}

impl RunResult {
    /// Lost on a step failure, a non-finite error, or a position error above
    /// `threshold` at any step after the first `warmup`.
    pub fn is_lost(&self, threshold: f64, warmup: usize) -> bool {
        self.failure.is_some()
            || self.pos_sq_err.iter().chain(&self.vel_sq_err).any(|e| !e.is_finite())
            || self.pos_sq_err.iter().skip(warmup).any(|e| e.sqrt() > threshold)
    }

    /// Completed every step with finite errors.
    pub fn is_complete(&self, steps: usize) -> bool {
        self.failure.is_none()
            && self.pos_sq_err.len() == steps
            && self.pos_sq_err.iter().chain(&self.vel_sq_err).all(|e| e.is_finite())
    }

    pub fn iterations(&self) -> usize {
        self.reports.iter().map(|r| r.iterations).sum()
    }
}

/// Runs one filter over `track`, stopping at the first step failure.
pub fn run_filter(cfg: &ScenarioConfig, spec: &FilterSpec, track: &Track, run_index: u64) -> Result<RunResult> {
    let model = cfg.model()?;
    let nominal_r = cfg.nominal_r();
    let mut belief = cfg.initial_belief()?;
    let mut rng = stream_rng(cfg.seed, run_index, StreamRole::for_filter(&spec.label()));
    let fixed_r = spec.fixed_covariance(&cfg.noise, &nominal_r);
    let vb = if spec.kind.is_variational() {
        Some(spec.vb_config(&cfg.noise, &nominal_r, cfg.iw_dof)?)
    } else {
        None
    };
    let mut out = RunResult {
        pos_sq_err: Vec::with_capacity(cfg.steps),
        vel_sq_err: Vec::with_capacity(cfg.steps),
        failure: None,
        wall_time: Duration::ZERO,
        reports: Vec::new(),
    };
    let start = Instant::now();
    for (k, (x, z)) in track.states.iter().zip(&track.measurements).enumerate() {
        let step = match (&vb, &fixed_r) {
            (Some(vb), _) => filter_step(&model, &belief, z, vb, &mut rng).map(|(b, report)| (b, Some(report))),
            (None, Some(r)) => kf_step(&model, &belief, z, r).map(|b| (b, None)),
            (None, None) => unreachable!("KFTNCM without a true covariance is filtered out by the caller"),
        };
        match step {
            Ok((next, report)) => {
                belief = next;
                out.reports.extend(report);
                let (pos, vel) = squared_errors(&belief.mean, x);
                out.pos_sq_err.push(pos);
                out.vel_sq_err.push(vel);
                if !belief.is_finite() {
                    out.failure = Some((k + 1, "non-finite estimate".into()));
                    break;
                }
            }
            Err(e) => {
                out.failure = Some((k + 1, e.to_string()));
                break;
            }
        }
    }
    out.wall_time = start.elapsed();
    Ok(out)
}

fn squared_errors(est: &DVector<f64>, truth: &DVector<f64>) -> (f64, f64) {
    let d = est - truth;
    (d[0] * d[0] + d[1] * d[1], d[2] * d[2] + d[3] * d[3])
}

/// Per-step RMSE over the runs given: `sqrt(mean_i err_i[k])`.
pub fn rmse_over_runs(errors: &[&[f64]], steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|k| {
            if errors.is_empty() {
                return f64::NAN;
            }
            let sum: f64 = errors.iter().map(|e| e[k]).sum();
            (sum / errors.len() as f64).sqrt()
        })
        .collect()
}

/// Mean of the per-step RMSE after the first `warmup` steps (all steps when
/// the track is no longer than the warm-up).
pub fn time_averaged(rmse: &[f64], warmup: usize) -> f64 {
    let tail = if rmse.len() > warmup { &rmse[warmup..] } else { rmse };
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Whether at least `min_fraction` of the runs were not lost.
pub fn effectiveness(results: &[RunResult], loss_threshold: f64, warmup: usize, min_fraction: f64) -> bool {
    assert!(!results.is_empty(), "effectiveness needs at least one run");
    let kept = results.iter().filter(|r| !r.is_lost(loss_threshold, warmup)).count();
    // tolerance keeps exact fractions such as 19/20 >= 0.95 on the passing side
    kept as f64 >= min_fraction * results.len() as f64 * (1.0 - 1e-12)
}

/// Aggregates of one filter across all runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterReport {
    pub label: String,
    pub kind: FilterKind,
    /// Shape the filter ran with; `None` for the plain Kalman filters.
    pub shape: Option<f64>,
    /// `false` for KFTNCM when the noise has no finite covariance.
    pub applicable: bool,
    pub runs: Vec<RunResult>,
    /// Per-step RMSE over the complete runs.
    pub pos_rmse_time: Vec<f64>,
    pub vel_rmse_time: Vec<f64>,
    pub pos_rmse: f64,
    pub vel_rmse: f64,
    /// Fixed-point iterations per step; 1 for the plain Kalman filters.
    pub avg_iters: f64,
    /// Mean wall time of one run.
    pub avg_time_s: f64,
    /// Share of scale estimates that fell back from the Gamma series.
    pub fallback_ratio: f64,
    pub effective: bool,
    pub lost_runs: usize,
}

impl FilterReport {
    fn aggregate(cfg: &ScenarioConfig, spec: &FilterSpec, runs: Vec<RunResult>) -> Self {
        let complete: Vec<&RunResult> = runs.iter().filter(|r| r.is_complete(cfg.steps)).collect();
        let pos: Vec<&[f64]> = complete.iter().map(|r| r.pos_sq_err.as_slice()).collect();
        let vel: Vec<&[f64]> = complete.iter().map(|r| r.vel_sq_err.as_slice()).collect();
        let pos_rmse_time = rmse_over_runs(&pos, cfg.steps);
        let vel_rmse_time = rmse_over_runs(&vel, cfg.steps);
        let steps_done: usize = runs.iter().map(|r| r.pos_sq_err.len()).sum();
        let avg_iters = if spec.kind.is_variational() {
            runs.iter().map(RunResult::iterations).sum::<usize>() as f64 / steps_done.max(1) as f64
        } else {
            1.0
        };
        let (estimates, fallbacks) = runs
            .iter()
            .flat_map(|r| &r.reports)
            .fold((0usize, 0usize), |(e, f), rep| (e + rep.estimates, f + rep.fallbacks));
        let lost_runs = runs.iter().filter(|r| r.is_lost(cfg.loss_threshold, cfg.warmup)).count();
        FilterReport {
            label: spec.label(),
            kind: spec.kind,
            shape: spec.resolved_shape(&cfg.noise),
            applicable: true,
            pos_rmse: time_averaged(&pos_rmse_time, cfg.warmup),
            vel_rmse: time_averaged(&vel_rmse_time, cfg.warmup),
            pos_rmse_time,
            vel_rmse_time,
            avg_iters,
            avg_time_s: runs.iter().map(|r| r.wall_time.as_secs_f64()).sum::<f64>() / runs.len() as f64,
            fallback_ratio: if estimates == 0 {
                0.0
            } else {
                fallbacks as f64 / estimates as f64
            },
            effective: effectiveness(&runs, cfg.loss_threshold, cfg.warmup, cfg.min_fraction),
            lost_runs,
            runs,
        }
    }

    fn not_applicable(cfg: &ScenarioConfig, spec: &FilterSpec) -> Self {
        FilterReport {
            label: spec.label(),
            kind: spec.kind,
            shape: None,
            applicable: false,
            runs: Vec::new(),
            pos_rmse_time: vec![f64::NAN; cfg.steps],
            vel_rmse_time: vec![f64::NAN; cfg.steps],
            pos_rmse: f64::NAN,
            vel_rmse: f64::NAN,
            avg_iters: f64::NAN,
            avg_time_s: f64::NAN,
            fallback_ratio: f64::NAN,
            effective: false,
            lost_runs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub steps: usize,
    pub mc_runs: usize,
    pub filters: Vec<FilterReport>,
}

impl MonteCarloReport {
    pub fn filter(&self, label: &str) -> Option<&FilterReport> {
        self.filters.iter().find(|f| f.label == label)
    }
}

/// Runs every configured filter on `mc_runs` simulated tracks.
///
/// Runs execute on the current rayon pool; results are joined in run order,
/// so every aggregate is independent of scheduling.
pub fn run_monte_carlo(cfg: &ScenarioConfig) -> Result<MonteCarloReport> {
    cfg.validate()?;
    let nominal_r = cfg.nominal_r();
    let active: Vec<&FilterSpec> = cfg
        .filters
        .iter()
        .filter(|s| s.kind.is_variational() || s.fixed_covariance(&cfg.noise, &nominal_r).is_some())
        .collect();
    let per_run: Vec<Vec<RunResult>> = (0..cfg.mc_runs as u64)
        .into_par_iter()
        .map(|run| {
            let track = simulate_track(cfg, run, cfg.seed)?;
            active.iter().map(|spec| run_filter(cfg, spec, &track, run)).collect()
        })
        .collect::<Result<_>>()?;
    let mut by_filter: Vec<Vec<RunResult>> = vec![Vec::with_capacity(cfg.mc_runs); active.len()];
    for run in per_run {
        for (slot, result) in by_filter.iter_mut().zip(run) {
            slot.push(result);
        }
    }
    let mut by_filter = by_filter.into_iter();
    let filters = cfg
        .filters
        .iter()
        .map(|spec| {
            if active.iter().any(|a| std::ptr::eq(*a, spec)) {
                FilterReport::aggregate(cfg, spec, by_filter.next().expect("one slot per active filter"))
            } else {
                FilterReport::not_applicable(cfg, spec)
            }
        })
        .collect();
    Ok(MonteCarloReport {
        steps: cfg.steps,
        mc_runs: cfg.mc_runs,
        filters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracking::noise::NoiseFamily;

    fn run_with(pos: Vec<f64>, failure: Option<(usize, String)>) -> RunResult {
        RunResult {
            vel_sq_err: vec![0.0; pos.len()],
            pos_sq_err: pos,
            failure,
            wall_time: Duration::ZERO,
            reports: Vec::new(),
        }
    }

    #[test]
    fn rmse_fixture() {
        let a = [9.0];
        let b = [16.0];
        let rmse = rmse_over_runs(&[&a, &b], 1);
        assert!((rmse[0] - 12.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn time_average_skips_warmup() {
        let rmse: Vec<f64> = (0..20).map(f64::from).collect();
        assert_eq!(time_averaged(&rmse, 10), 14.5);
        assert_eq!(time_averaged(&rmse[..5], 10), 2.0);
    }

    #[test]
    fn effectiveness_cases() {
        let fine: Vec<RunResult> = (0..20).map(|_| run_with(vec![1.0; 30], None)).collect();
        assert!(effectiveness(&fine, 500.0, 10, 0.95));

        let mut one_bad = fine.clone();
        one_bad[3].pos_sq_err[12] = f64::NAN;
        assert!(effectiveness(&one_bad, 500.0, 10, 0.95));
        one_bad[4].failure = Some((7, "innovation".into()));
        assert!(!effectiveness(&one_bad, 500.0, 10, 0.95));

        // large errors inside the warm-up do not count
        let mut early = fine.clone();
        for r in &mut early {
            r.pos_sq_err[5] = 1e8;
        }
        assert!(effectiveness(&early, 500.0, 10, 0.95));
        early[0].pos_sq_err[10] = 501.0 * 501.0;
        early[1].pos_sq_err[29] = 501.0 * 501.0;
        assert!(!effectiveness(&early, 500.0, 10, 0.95));
    }

    fn gaussian_cfg(filters: Vec<FilterSpec>) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::new(NoiseFamily::GaussianMixture { u: 1.0, p_outlier: 0.1 }, filters);
        cfg.steps = 30;
        cfg.mc_runs = 4;
        cfg.seed = 11;
        cfg
    }

    #[test]
    fn single_run_kf_matches_reference() {
        let mut cfg = gaussian_cfg(vec![FilterSpec::new(FilterKind::Kf)]);
        cfg.mc_runs = 1;
        let report = run_monte_carlo(&cfg).unwrap();
        let track = simulate_track(&cfg, 0, cfg.seed).unwrap();
        let model = cfg.model().unwrap();
        let mut belief = cfg.initial_belief().unwrap();
        let r = cfg.nominal_r();
        let f = &report.filters[0];
        for (k, (x, z)) in track.states.iter().zip(&track.measurements).enumerate() {
            belief = kf_step(&model, &belief, z, &r).unwrap();
            let d = &belief.mean - x;
            let pos = (d[0] * d[0] + d[1] * d[1]).sqrt();
            assert!((f.pos_rmse_time[k] - pos).abs() <= 1e-12 * pos.max(1.0));
        }
        assert_eq!(f.avg_iters, 1.0);
        assert_eq!(f.fallback_ratio, 0.0);
    }

    #[test]
    fn kftncm_not_applicable_without_covariance() {
        let mut cfg = gaussian_cfg(vec![FilterSpec::new(FilterKind::Kftncm), FilterSpec::new(FilterKind::Kf)]);
        cfg.noise = NoiseFamily::Sgas { alpha: 1.5 };
        let report = run_monte_carlo(&cfg).unwrap();
        assert!(!report.filters[0].applicable && report.filters[0].runs.is_empty());
        assert!(report.filters[1].applicable && report.filters[1].runs.len() == 4);
    }

    #[test]
    fn aggregation_is_independent_of_thread_count() {
        let cfg = gaussian_cfg(vec![
            FilterSpec::new(FilterKind::RkfSgasGsis),
            FilterSpec::new(FilterKind::Rstkf),
            FilterSpec::new(FilterKind::Kf),
        ]);
        let run_on = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| run_monte_carlo(&cfg).unwrap())
        };
        let (a, b) = (run_on(1), run_on(3));
        for (fa, fb) in a.filters.iter().zip(&b.filters) {
            assert_eq!(fa.pos_rmse_time, fb.pos_rmse_time);
            assert_eq!(fa.vel_rmse, fb.vel_rmse);
            assert_eq!(fa.avg_iters, fb.avg_iters);
            assert_eq!(fa.fallback_ratio, fb.fallback_ratio);
        }
    }

    #[test]
    fn adding_a_filter_leaves_others_unchanged() {
        let one = run_monte_carlo(&gaussian_cfg(vec![FilterSpec::new(FilterKind::RkfSgasIs)])).unwrap();
        let two = run_monte_carlo(&gaussian_cfg(vec![
            FilterSpec::new(FilterKind::Rstkf),
            FilterSpec::new(FilterKind::RkfSgasIs),
        ]))
        .unwrap();
        assert_eq!(one.filters[0].pos_rmse_time, two.filters[1].pos_rmse_time);
    }
}
